struct Vec2 {
  double x, y;
};

Vec2 operator+(const Vec2 &a, const Vec2 &b) {
  return Vec2{a.x + b.x, a.y + b.y};
}

bool operator==(const Vec2 &a, const Vec2 &b) {
  return a.x == b.x;
}
