#pragma once

// Closed-form reference material for porous-medium flows: the
// Barenblatt-Pattle source solution, the theoretical waiting time for
// sine-power data, and the library of initial densities used by the
// built-in experiments.

#include "lagdiff/mesh.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace lagdiff {

/// Self-similar source solution of rho_t = Laplace(rho^alpha) in d space
/// dimensions.  The profile is
///   B(x, t) = t^-k (c0 - k(alpha-1)/(2 d alpha) |x|^2 t^(-2k/d))_+^(1/(alpha-1))
/// with k = 1 / (alpha - 1 + 2/d); the classical normalized 1D profile has
/// c0 = 1.
struct Barenblatt {
  double alpha = 2.0;
  int dim = 1;
  double c0 = 1.0;

  Barenblatt(double alpha_, int dim_ = 1, double c0_ = 1.0) : alpha(alpha_), dim(dim_), c0(c0_) {
    if (!(alpha > 1.0)) throw std::invalid_argument("Barenblatt: alpha must exceed 1");
    if (dim != 1 && dim != 2) throw std::invalid_argument("Barenblatt: dim must be 1 or 2");
    if (!(c0 > 0.0)) throw std::invalid_argument("Barenblatt: c0 must be positive");
  }

  double k() const { return 1.0 / (alpha - 1.0 + 2.0 / dim); }

  /// Density at distance r from the origin at time t > 0.
  double value(double r, double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("Barenblatt: t must be positive");
    const double kk = k();
    const double bracket =
        c0 - kk * (alpha - 1.0) / (2.0 * dim * alpha) * r * r * std::pow(t, -2.0 * kk / dim);
    if (bracket <= 0.0) return 0.0;
    return std::pow(t, -kk) * std::pow(bracket, 1.0 / (alpha - 1.0));
  }

  double operator()(const Vec<1>& x, double t) const { return value(std::abs(x[0]), t); }
  double operator()(const Vec<2>& x, double t) const { return value(x.norm(), t); }

  /// Radius of the support at time t: the free boundary sits at |x| = radius(t).
  double radius(double t) const {
    const double kk = k();
    return std::sqrt(2.0 * dim * alpha * c0 / (kk * (alpha - 1.0))) * std::pow(t, kk / dim);
  }
};

/// Theoretical waiting time for the sine-power initial data
/// (alpha/(alpha-1)) rho_0^(alpha-1) = (1-theta) sin^2 X + theta sin^4 X.
/// The closed form 1 / (2 (alpha+1)(1-theta)) is only known for
/// 0 <= theta <= 1/4; outside that window no prediction is returned.
inline std::optional<double> waiting_time_theory(double alpha, double theta) {
  if (!(alpha > 1.0)) throw std::invalid_argument("waiting_time_theory: alpha must exceed 1");
  if (theta < 0.0 || theta > 0.25) return std::nullopt;
  return 1.0 / (2.0 * (alpha + 1.0) * (1.0 - theta));
}

// ---------------------------------------------------------------------------
// Initial densities.  Each is a plain callable on reference coordinates.

/// Sine-power density on [-pi, 0] (zero elsewhere), the classical datum with
/// a positive waiting time.
struct SinePowerDatum {
  double alpha;
  double theta;

  double operator()(const Vec<1>& X) const {
    const double x = X[0];
    if (x < -M_PI || x > 0.0) return 0.0;
    const double s2 = std::sin(x) * std::sin(x);
    const double v = (1.0 - theta) * s2 + theta * s2 * s2;
    if (v <= 0.0) return 0.0;
    return std::pow((alpha - 1.0) / alpha * v, 1.0 / (alpha - 1.0));
  }
};

/// Radial cosine bump cos(pi r / 2) supported on the unit disk.
struct CosineBumpDatum {
  double operator()(const Vec<2>& X) const {
    const double r = X.norm();
    return r <= 1.0 ? std::cos(0.5 * M_PI * r) : 0.0;
  }
  double operator()(double r) const { return r <= 1.0 ? std::cos(0.5 * M_PI * r) : 0.0; }
};

/// Density with a partial-donut ("horseshoe") support: three-quarters of the
/// annulus 0.5 <= r <= 1 capped by two half disks of radius 0.25 centred at
/// (0, 0.75) and (0.75, 0).  rho^(alpha-1) is prescribed piecewise.
struct DonutDatum {
  double alpha;

  double operator()(const Vec<2>& P) const {
    const double X = P[0], Y = P[1];
    const double r = P.norm();
    double v = 0.0;
    if (r >= 0.5 && r <= 1.0 && (X < 0.0 || Y < 0.0)) {
      v = 0.0625 - (r - 0.75) * (r - 0.75);
    } else if (X >= 0.0 && X * X + (Y - 0.75) * (Y - 0.75) <= 0.0625) {
      v = 0.0625 - X * X - (Y - 0.75) * (Y - 0.75);
    } else if (Y >= 0.0 && (X - 0.75) * (X - 0.75) + Y * Y <= 0.0625) {
      v = 0.0625 - (X - 0.75) * (X - 0.75) - Y * Y;
    }
    if (v <= 0.0) return 0.0;
    return std::pow(25.0 * std::pow(v, 1.5), 1.0 / (alpha - 1.0));
  }
};

/// Two Gaussian peaks joined by a thin constant layer; strictly positive, so
/// suited to a pinned-boundary run on [-1, 1]^2.
struct TwoPeaksDatum {
  double operator()(const Vec<2>& P) const {
    const double X = P[0], Y = P[1];
    const double d1 = (X - 0.3) * (X - 0.3) + (Y - 0.3) * (Y - 0.3);
    const double d2 = (X + 0.3) * (X + 0.3) + (Y + 0.3) * (Y + 0.3);
    return std::exp(-20.0 * d1) + std::exp(-20.0 * d2) + 0.001;
  }
};

}  // namespace lagdiff
