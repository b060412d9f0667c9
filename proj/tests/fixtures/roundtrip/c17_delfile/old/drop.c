int drop(void) {
  return -1;
}
