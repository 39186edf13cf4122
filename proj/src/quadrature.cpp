#include "nlflow/quadrature.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <mutex>
#include <queue>
#include <vector>

#include "nlflow/error.hpp"

namespace nlflow {

namespace {

GaussRule make_rule(int q) {
  GaussRule r;
  auto zeros = boost::math::legendre_p_zeros<double>(q);
  for (double z : zeros) {
    double dp = boost::math::legendre_p_prime(q, z);
    double w = 2.0 / ((1.0 - z * z) * dp * dp);
    if (z == 0.0) {
      r.x.push_back(0.5);
      r.w.push_back(0.5 * w);
      continue;
    }
    r.x.push_back(0.5 * (1.0 - z));
    r.w.push_back(0.5 * w);
    r.x.push_back(0.5 * (1.0 + z));
    r.w.push_back(0.5 * w);
  }
  return r;
}

struct Box {
  Point lo;
  Point hi;
};

class TentIntegrator {
 public:
  TentIntegrator(int d, const Point& center, const Point& delta, const KernelFn& f,
                 const TentOptions& opt)
      : d_(d), c_(center), delta_(delta), f_(f), opt_(opt),
        rule_(gauss_legendre_unit(opt.q)) {}

  double run() {
    // Orthant boxes in t = xi - center, on each of which the tent is linear.
    std::vector<Box> boxes;
    const int n_orth = 1 << d_;
    for (int o = 0; o < n_orth; ++o) {
      Box b{};
      for (int i = 0; i < d_; ++i) {
        bool neg = (o >> i) & 1;
        b.lo[i] = neg ? -2.0 * delta_[i] : 0.0;
        b.hi[i] = neg ? 0.0 : 2.0 * delta_[i];
      }
      boxes.push_back(b);
    }
    if (!opt_.adaptive) {
      double s = 0.0;
      for (const auto& b : boxes) s += gauss(b);
      return s;
    }
    // Global adaptive: always split the box with the largest error estimate.
    std::priority_queue<Node> queue;
    double accepted = 0.0, pending = 0.0, err = 0.0;
    for (const auto& b : boxes) {
      double e = gauss(b);
      if (smooth(b)) {
        accepted += e;
      } else {
        Node n = examine(b, e, 0);
        pending += n.refined;
        err += n.err;
        queue.push(std::move(n));
      }
    }
    while (!queue.empty()) {
      if (err <= opt_.rel_tol * std::abs(accepted + pending) || boxes_ > opt_.max_boxes) break;
      Node n = queue.top();
      queue.pop();
      pending -= n.refined;
      err -= n.err;
      if (n.depth >= opt_.max_depth) {
        accepted += n.refined;
        continue;
      }
      for (std::size_t k = 0; k < n.kids.size(); ++k) {
        if (smooth(n.kids[k])) {
          accepted += n.kid_est[k];
        } else {
          Node c = examine(n.kids[k], n.kid_est[k], n.depth + 1);
          pending += c.refined;
          err += c.err;
          queue.push(std::move(c));
        }
      }
    }
    return accepted + pending;
  }

 private:
  struct Node {
    double err;
    double refined;  // sum of the kids' estimates
    int depth;
    std::vector<Box> kids;
    std::vector<double> kid_est;
    bool operator<(const Node& o) const { return err < o.err; }
  };

  bool smooth(const Box& b) const {
    if (!opt_.smooth) return false;
    Point lo{}, hi{};
    for (int i = 0; i < d_; ++i) {
      lo[i] = c_[i] + b.lo[i];
      hi[i] = c_[i] + b.hi[i];
    }
    return opt_.smooth(lo, hi);
  }

  Node examine(const Box& b, double est, int depth) {
    Node n{0.0, 0.0, depth, {}, {}};
    const int n_kids = 1 << d_;
    for (int k = 0; k < n_kids; ++k) {
      Box c = b;
      for (int i = 0; i < d_; ++i) {
        double mid = 0.5 * (b.lo[i] + b.hi[i]);
        if ((k >> i) & 1) c.lo[i] = mid; else c.hi[i] = mid;
      }
      double e = gauss(c);
      n.kids.push_back(c);
      n.kid_est.push_back(e);
      n.refined += e;
    }
    boxes_ += n_kids;
    n.err = std::abs(n.refined - est);
    return n;
  }

  double gauss(const Box& b) const {
    const int q = static_cast<int>(rule_.x.size());
    double vol = 1.0;
    for (int i = 0; i < d_; ++i) vol *= b.hi[i] - b.lo[i];
    double sum = 0.0;
    Point xi{};
    int idx[3] = {0, 0, 0};
    const int total = d_ == 2 ? q * q : q * q * q;
    for (int n = 0; n < total; ++n) {
      idx[0] = n % q;
      idx[1] = (n / q) % q;
      idx[2] = n / (q * q);
      double wt = 1.0;
      for (int i = 0; i < d_; ++i) {
        double t = b.lo[i] + (b.hi[i] - b.lo[i]) * rule_.x[idx[i]];
        xi[i] = c_[i] + t;
        wt *= rule_.w[idx[i]] * (2.0 * delta_[i] - std::abs(t));
      }
      double v = f_(xi);
      if (v != 0.0) sum += wt * v;
    }
    return sum * vol;
  }

  int d_;
  Point c_;
  Point delta_;
  const KernelFn& f_;
  TentOptions opt_;
  const GaussRule& rule_;
  long boxes_ = 0;
};

}  // namespace

const GaussRule& gauss_legendre_unit(int q) {
  require(q >= 1 && q <= 64, "gauss_legendre_unit: q must be in [1, 64]");
  static std::mutex mu;
  static std::vector<GaussRule> cache(65);
  std::lock_guard<std::mutex> lock(mu);
  if (cache[q].x.empty()) cache[q] = make_rule(q);
  return cache[q];
}

double tent_integral(int d, const Point& center, const Point& delta_half, const KernelFn& f,
                     const TentOptions& opt) {
  require(d == 2 || d == 3, "tent_integral: dimension must be 2 or 3");
  // delta_half is the box half-width; the tent extends to twice that.
  TentIntegrator ti(d, center, delta_half, f, opt);
  return ti.run();
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  // Boost compares the error on the reference interval with a tolerance
  // scaled by the true length, so short intervals never converge. Map to [0, 1].
  const double len = b - a;
  auto g = [&](double x) { return f(a + len * x); };
  return len * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, 15, rel_tol);
}

double integrate_from_zero(const std::function<double(double)>& f, double b, double rel_tol) {
  double sum = 0.0;
  for (int j = 0; j < 80; ++j) {
    double piece = integrate(f, b * std::ldexp(1.0, -j - 1), b * std::ldexp(1.0, -j), rel_tol);
    sum += piece;
    if (j > 8 && std::abs(piece) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double integrate_to_infinity(const std::function<double(double)>& f, double a, double rel_tol) {
  boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([&](double t) { return f(a + t); }, rel_tol);
}

double integrate_singular(const std::function<double(double)>& f, double a, double b,
                          double rel_tol) {
  if (a == b) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, a, b, rel_tol);
}

}  // namespace nlflow
