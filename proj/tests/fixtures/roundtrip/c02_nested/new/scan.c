int count_pairs(const int *v, int n) {
  int pairs = 0;
  for (int i = 0; i < n; i++) {
    for (int j = i + 1; j < n; j++) {
      if (v[i] == v[j] && v[i] != 0) {
        pairs++;
      }
    }
  }
  return pairs;
}
