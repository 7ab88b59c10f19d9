#include "pfem/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pfem {

namespace {

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double max_distance(const Polygon& domain, const Vec2& z) {
  // |x - z| is convex, so its maximum over a convex polygon sits at a vertex.
  double r = 0.0;
  for (const auto& v : domain.vertices()) r = std::max(r, (v - z).norm());
  return r;
}

void require_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw InvalidInput("rough coefficient exponent beta must lie in (0,1), got " + std::to_string(beta));
  }
}

}  // namespace

std::vector<CatalogueEntry> catalogue() {
  return {
      {"identity", "constant", "a(x) = I", {}},
      {"constant", "constant", "a(x) = c I", {{"c", 2.0}}},
      {"smooth_anisotropic", "lipschitz", "a(x) = diag(1 + x^2, 2 - y^2)", {}},
      {"rough_isotropic", "w1p_rough", "a(x) = (1 + |x - z|^beta) I, singular point at a mesh vertex",
       {{"beta", 0.6}, {"zx", 0.5}, {"zy", 0.5}}},
      {"rough_isotropic", "w1p_rough", "a(x) = (1 + |x - z|^beta) I, singular point inside an element",
       {{"beta", 0.6}, {"zx", 0.53}, {"zy", 0.47}}},
      {"rough_anisotropic", "w1p_rough",
       "a(x) = Q(pi |x-z|^beta) diag(1 + |x-z|^beta, 1 + ratio |x-z|^beta) Q^T",
       {{"beta", 0.6}, {"zx", 0.5}, {"zy", 0.5}, {"ratio", 0.25}}},
  };
}

CoefficientPtr make_sample(const std::string& name, const std::map<std::string, double>& params,
                           const Polygon& domain) {
  auto a = std::make_shared<CoefficientField>();
  a->name = name;
  a->params = params;

  if (name == "identity") {
    a->regularity_tag = "constant";
    a->eval = [](const Vec2&) { return Mat2::Identity().eval(); };
    a->gradient = [](const Vec2&) { return std::array<Mat2, 2>{Mat2::Zero(), Mat2::Zero()}; };
    a->lambda = 1.0;
  } else if (name == "constant") {
    const double c = param(params, "c", 2.0);
    if (!(c > 0.0)) throw InvalidInput("constant coefficient needs c > 0");
    a->params["c"] = c;
    a->regularity_tag = "constant";
    a->eval = [c](const Vec2&) { return (c * Mat2::Identity()).eval(); };
    a->gradient = [](const Vec2&) { return std::array<Mat2, 2>{Mat2::Zero(), Mat2::Zero()}; };
    a->lambda = std::max(c, 1.0 / c);
  } else if (name == "smooth_anisotropic") {
    double x2 = 0.0, y2 = 0.0;
    for (const auto& v : domain.vertices()) {
      x2 = std::max(x2, v.x() * v.x());
      y2 = std::max(y2, v.y() * v.y());
    }
    if (y2 >= 2.0) throw InvalidInput("smooth_anisotropic: 2 - y^2 must stay positive on the domain");
    a->regularity_tag = "lipschitz";
    a->eval = [](const Vec2& x) {
      Mat2 m = Mat2::Zero();
      m(0, 0) = 1.0 + x.x() * x.x();
      m(1, 1) = 2.0 - x.y() * x.y();
      return m;
    };
    a->gradient = [](const Vec2& x) {
      std::array<Mat2, 2> g{Mat2::Zero(), Mat2::Zero()};
      g[0](0, 0) = 2.0 * x.x();
      g[1](1, 1) = -2.0 * x.y();
      return g;
    };
    const double lo = std::min(1.0, 2.0 - y2);
    const double hi = std::max(1.0 + x2, 2.0);
    a->lambda = std::max(hi, 1.0 / lo);
  } else if (name == "rough_isotropic" || name == "rough_anisotropic") {
    const double beta = param(params, "beta", 0.6);
    require_beta(beta);
    const Vec2 z(param(params, "zx", 0.5), param(params, "zy", 0.5));
    a->params["beta"] = beta;
    a->params["zx"] = z.x();
    a->params["zy"] = z.y();
    a->regularity_tag = "w1p_rough";
    // |grad a| ~ |x-z|^(beta-1) lies in L^p(R^2 locally) iff p (1 - beta) < 2.
    a->alpha_sup = 2.0 * beta / (1.0 - beta);
    a->alpha = 0.99 * a->alpha_sup;
    a->lambda = 1.0 + std::pow(max_distance(domain, z), beta);

    if (name == "rough_isotropic") {
      a->eval = [beta, z](const Vec2& x) {
        return ((1.0 + std::pow((x - z).norm(), beta)) * Mat2::Identity()).eval();
      };
      a->gradient = [beta, z](const Vec2& x) {
        const Vec2 d = x - z;
        const double r = d.norm();
        std::array<Mat2, 2> g{Mat2::Zero(), Mat2::Zero()};
        if (r == 0.0) return g;
        const double s = beta * std::pow(r, beta - 2.0);
        g[0] = s * d.x() * Mat2::Identity();
        g[1] = s * d.y() * Mat2::Identity();
        return g;
      };
    } else {
      const double ratio = param(params, "ratio", 0.25);
      if (!(ratio >= 0.0 && ratio <= 1.0)) throw InvalidInput("rough_anisotropic: ratio must lie in [0,1]");
      a->params["ratio"] = ratio;
      a->eval = [beta, z, ratio](const Vec2& x) {
        const double rb = std::pow((x - z).norm(), beta);
        const double th = std::numbers::pi * rb;
        const double c = std::cos(th), s = std::sin(th);
        const double m1 = 1.0 + rb, m2 = 1.0 + ratio * rb;
        Mat2 m;
        m(0, 0) = m1 * c * c + m2 * s * s;
        m(1, 1) = m1 * s * s + m2 * c * c;
        m(0, 1) = (m1 - m2) * c * s;
        m(1, 0) = m(0, 1);
        return m;
      };
      a->gradient = [beta, z, ratio](const Vec2& x) {
        const Vec2 d = x - z;
        const double r = d.norm();
        std::array<Mat2, 2> g{Mat2::Zero(), Mat2::Zero()};
        if (r == 0.0) return g;
        const double rb = std::pow(r, beta);
        const double th = std::numbers::pi * rb;
        const double c = std::cos(th), s = std::sin(th);
        const double m1 = 1.0 + rb, m2 = 1.0 + ratio * rb;
        const Vec2 drb = beta * std::pow(r, beta - 2.0) * d;
        for (int k = 0; k < 2; ++k) {
          const double dm1 = drb[k], dm2 = ratio * drb[k], dth = std::numbers::pi * drb[k];
          Mat2& gk = g[k];
          gk(0, 0) = dm1 * c * c + dm2 * s * s - 2.0 * (m1 - m2) * c * s * dth;
          gk(1, 1) = dm1 * s * s + dm2 * c * c + 2.0 * (m1 - m2) * c * s * dth;
          gk(0, 1) = (dm1 - dm2) * c * s + (m1 - m2) * (c * c - s * s) * dth;
          gk(1, 0) = gk(0, 1);
        }
        return g;
      };
    }
  } else {
    throw InvalidInput("unknown coefficient sample '" + name + "'");
  }
  return a;
}

}  // namespace pfem
