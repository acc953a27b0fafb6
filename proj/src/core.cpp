#include "sphase/core.hpp"

namespace sphase {

namespace {

// Harmonic polynomials p_lm and their ambient gradients.
double poly(int l, int m, const Vec3& v, Vec3* grad) {
  const double x = v.x(), y = v.y(), z = v.z();
  auto g = [&](double gx, double gy, double gz) {
    if (grad) *grad = Vec3(gx, gy, gz);
  };
  switch (l) {
    case 0:
      g(0, 0, 0);
      return 1.0;
    case 1:
      switch (m) {
        case -1: g(0, 1, 0); return y;
        case 0:  g(0, 0, 1); return z;
        case 1:  g(1, 0, 0); return x;
      }
      break;
    case 2:
      switch (m) {
        case -2: g(y, x, 0); return x * y;
        case -1: g(0, z, y); return y * z;
        case 0:  g(-2 * x, -2 * y, 4 * z); return 2 * z * z - x * x - y * y;
        case 1:  g(z, 0, x); return z * x;
        case 2:  g(2 * x, -2 * y, 0); return x * x - y * y;
      }
      break;
    case 3:
      switch (m) {
        case -3: g(6 * x * y, 3 * x * x - 3 * y * y, 0); return y * (3 * x * x - y * y);
        case -2: g(y * z, x * z, x * y); return x * y * z;
        case -1:
          g(-2 * x * y, 4 * z * z - x * x - 3 * y * y, 8 * y * z);
          return y * (4 * z * z - x * x - y * y);
        case 0:
          g(-6 * x * z, -6 * y * z, 6 * z * z - 3 * x * x - 3 * y * y);
          return z * (2 * z * z - 3 * x * x - 3 * y * y);
        case 1:
          g(4 * z * z - 3 * x * x - y * y, -2 * x * y, 8 * x * z);
          return x * (4 * z * z - x * x - y * y);
        case 2:
          g(2 * x * z, -2 * y * z, x * x - y * y);
          return z * (x * x - y * y);
        case 3:  g(3 * x * x - 3 * y * y, -6 * x * y, 0); return x * (x * x - 3 * y * y);
      }
      break;
  }
  throw ConfigError("solid_harmonic: unsupported (l,m) = (" + std::to_string(l) + "," +
                    std::to_string(m) + "), need 0 <= l <= 3, |m| <= l");
}

}  // namespace

double solid_harmonic(int l, int m, const Vec3& x) {
  const double r = x.norm();
  if (r == 0.0) throw GeometryError("solid_harmonic: zero direction");
  return poly(l, m, x / r, nullptr);
}

Vec3 solid_harmonic_surface_grad(int l, int m, const Vec3& u) {
  Vec3 grad;
  const Vec3 un = u.normalized();
  const double p = poly(l, m, un, &grad);
  return grad - static_cast<double>(l) * p * un;
}

}  // namespace sphase
