#include "fastslow/fields.hpp"

#include <cmath>
#include <utility>

namespace fastslow {

bool Box::contains(const Vec& y) const {
  if (y.size() != lo.size()) return false;
  for (int i = 0; i < y.size(); ++i)
    if (y[i] < lo[i] || y[i] > hi[i]) return false;
  return true;
}

Box Box::cube(double lo, double hi, int dim) {
  Box b;
  b.lo = Vec::Constant(dim, lo);
  b.hi = Vec::Constant(dim, hi);
  return b;
}

bool operator==(const Box& a, const Box& b) {
  return a.lo.size() == b.lo.size() && a.lo == b.lo && a.hi == b.hi;
}

Vec ScalarField::gradient(const Vec&) const {
  throw GradientUnavailable("field has no analytic gradient");
}

Mat ScalarField::hessian(const Vec&) const {
  throw GradientUnavailable("field has no analytic Hessian");
}

namespace {

void check_box(const Box& box) {
  if (box.dim() == 0) throw DomainMismatch("empty domain box");
  for (int i = 0; i < box.dim(); ++i)
    if (!(box.lo[i] < box.hi[i]))
      throw DomainMismatch("degenerate domain box");
}

class ConstantField final : public ScalarField {
 public:
  ConstantField(double v, Box box) : v_(v), box_(std::move(box)) {
    check_box(box_);
  }
  int dim() const override { return box_.dim(); }
  const Box& domain() const override { return box_; }
  double value(const Vec&) const override { return v_; }
  bool has_analytic_gradient() const override { return true; }
  Vec gradient(const Vec&) const override { return Vec::Zero(dim()); }
  Mat hessian(const Vec&) const override { return Mat::Zero(dim(), dim()); }

 private:
  double v_;
  Box box_;
};

class GaussianBumpField final : public ScalarField {
 public:
  GaussianBumpField(Vec center, double width, double base, double amplitude,
                    Box box)
      : c_(std::move(center)), w_(width), base_(base), amp_(amplitude),
        box_(std::move(box)) {
    check_box(box_);
    if (c_.size() != box_.dim())
      throw DomainMismatch("bump center dimension mismatch");
    if (!(w_ > 0)) throw DomainMismatch("bump width must be positive");
  }
  int dim() const override { return box_.dim(); }
  const Box& domain() const override { return box_; }
  double value(const Vec& y) const override { return base_ + peak(y); }
  bool has_analytic_gradient() const override { return true; }
  Vec gradient(const Vec& y) const override {
    const Vec r = y - c_;
    return peak(y) * (-r / (w_ * w_));
  }
  Mat hessian(const Vec& y) const override {
    const Vec r = y - c_;
    const double w2 = w_ * w_;
    return peak(y) * (r * r.transpose() / (w2 * w2) -
                      Mat::Identity(dim(), dim()) / w2);
  }

 private:
  double peak(const Vec& y) const {
    const Vec r = y - c_;
    return amp_ * std::exp(-0.5 * r.squaredNorm() / (w_ * w_));
  }
  Vec c_;
  double w_, base_, amp_;
  Box box_;
};

class SmoothRampField final : public ScalarField {
 public:
  SmoothRampField(Vec direction, double offset, double width, double lo,
                  double hi, Box box)
      : d_(std::move(direction)), c_(offset), w_(width), lo_(lo), hi_(hi),
        box_(std::move(box)) {
    check_box(box_);
    if (d_.size() != box_.dim())
      throw DomainMismatch("ramp direction dimension mismatch");
    if (!(w_ > 0)) throw DomainMismatch("ramp width must be positive");
    const double n = d_.norm();
    if (!(n > 0)) throw DomainMismatch("ramp direction must be nonzero");
    d_ /= n;
  }
  int dim() const override { return box_.dim(); }
  const Box& domain() const override { return box_; }
  double value(const Vec& y) const override {
    return lo_ + (hi_ - lo_) * logistic(t(y));
  }
  bool has_analytic_gradient() const override { return true; }
  Vec gradient(const Vec& y) const override {
    const double s = logistic(t(y));
    return (hi_ - lo_) * s * (1.0 - s) / w_ * d_;
  }
  Mat hessian(const Vec& y) const override {
    const double s = logistic(t(y));
    const double s2 = s * (1.0 - s) * (1.0 - 2.0 * s);
    return (hi_ - lo_) * s2 / (w_ * w_) * (d_ * d_.transpose());
  }

 private:
  double t(const Vec& y) const { return (d_.dot(y) - c_) / w_; }
  static double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
  Vec d_;
  double c_, w_, lo_, hi_;
  Box box_;
};

class ProductField final : public ScalarField {
 public:
  explicit ProductField(std::vector<FieldPtr> fs) : fs_(std::move(fs)) {
    if (fs_.empty()) throw DomainMismatch("product of zero fields");
    for (const auto& f : fs_)
      if (!(f->domain() == fs_.front()->domain()))
        throw DomainMismatch("product factors declared on different boxes");
  }
  int dim() const override { return fs_.front()->dim(); }
  const Box& domain() const override { return fs_.front()->domain(); }
  double value(const Vec& y) const override {
    double v = 1.0;
    for (const auto& f : fs_) v *= f->value(y);
    return v;
  }
  bool has_analytic_gradient() const override {
    for (const auto& f : fs_)
      if (!f->has_analytic_gradient()) return false;
    return true;
  }
  Vec gradient(const Vec& y) const override {
    Vec g = Vec::Zero(dim());
    for (std::size_t i = 0; i < fs_.size(); ++i) {
      double rest = 1.0;
      for (std::size_t j = 0; j < fs_.size(); ++j)
        if (j != i) rest *= fs_[j]->value(y);
      g += rest * fs_[i]->gradient(y);
    }
    return g;
  }
  Mat hessian(const Vec& y) const override {
    const int d = dim();
    Mat h = Mat::Zero(d, d);
    for (std::size_t i = 0; i < fs_.size(); ++i) {
      double rest = 1.0;
      for (std::size_t j = 0; j < fs_.size(); ++j)
        if (j != i) rest *= fs_[j]->value(y);
      h += rest * fs_[i]->hessian(y);
      for (std::size_t j = i + 1; j < fs_.size(); ++j) {
        double others = 1.0;
        for (std::size_t k = 0; k < fs_.size(); ++k)
          if (k != i && k != j) others *= fs_[k]->value(y);
        const Vec gi = fs_[i]->gradient(y);
        const Vec gj = fs_[j]->gradient(y);
        h += others * (gi * gj.transpose() + gj * gi.transpose());
      }
    }
    return h;
  }

 private:
  std::vector<FieldPtr> fs_;
};

class PowerField final : public ScalarField {
 public:
  PowerField(FieldPtr f, double p) : f_(std::move(f)), p_(p) {}
  int dim() const override { return f_->dim(); }
  const Box& domain() const override { return f_->domain(); }
  double value(const Vec& y) const override {
    return std::pow(f_->value(y), p_);
  }
  bool has_analytic_gradient() const override {
    return f_->has_analytic_gradient();
  }
  Vec gradient(const Vec& y) const override {
    const double v = f_->value(y);
    return p_ * std::pow(v, p_ - 1.0) * f_->gradient(y);
  }
  Mat hessian(const Vec& y) const override {
    const double v = f_->value(y);
    const Vec g = f_->gradient(y);
    return p_ * (p_ - 1.0) * std::pow(v, p_ - 2.0) * (g * g.transpose()) +
           p_ * std::pow(v, p_ - 1.0) * f_->hessian(y);
  }

 private:
  FieldPtr f_;
  double p_;
};

class ScaledField final : public ScalarField {
 public:
  ScaledField(double c, FieldPtr f) : c_(c), f_(std::move(f)) {}
  int dim() const override { return f_->dim(); }
  const Box& domain() const override { return f_->domain(); }
  double value(const Vec& y) const override { return c_ * f_->value(y); }
  bool has_analytic_gradient() const override {
    return f_->has_analytic_gradient();
  }
  Vec gradient(const Vec& y) const override { return c_ * f_->gradient(y); }
  Mat hessian(const Vec& y) const override { return c_ * f_->hessian(y); }

 private:
  double c_;
  FieldPtr f_;
};

class ArgScaledField final : public ScalarField {
 public:
  ArgScaledField(FieldPtr f, double a) : f_(std::move(f)), a_(a) {
    if (a_ == 0) throw DomainMismatch("argument scale must be nonzero");
    box_.lo = f_->domain().lo / a_;
    box_.hi = f_->domain().hi / a_;
    if (a_ < 0) std::swap(box_.lo, box_.hi);
  }
  int dim() const override { return f_->dim(); }
  const Box& domain() const override { return box_; }
  double value(const Vec& y) const override { return f_->value(a_ * y); }
  bool has_analytic_gradient() const override {
    return f_->has_analytic_gradient();
  }
  Vec gradient(const Vec& y) const override {
    return a_ * f_->gradient(a_ * y);
  }
  Mat hessian(const Vec& y) const override {
    return a_ * a_ * f_->hessian(a_ * y);
  }

 private:
  FieldPtr f_;
  double a_;
  Box box_;
};

class SliceField final : public ScalarField {
 public:
  SliceField(FieldPtr f, int axis, Vec base)
      : f_(std::move(f)), axis_(axis), base_(std::move(base)) {
    if (axis_ < 0 || axis_ >= f_->dim())
      throw DomainMismatch("slice axis out of range");
    if (base_.size() != f_->dim())
      throw DomainMismatch("slice base dimension mismatch");
    box_.lo = Vec::Constant(1, f_->domain().lo[axis_]);
    box_.hi = Vec::Constant(1, f_->domain().hi[axis_]);
  }
  int dim() const override { return 1; }
  const Box& domain() const override { return box_; }
  double value(const Vec& t) const override { return f_->value(lift(t)); }
  bool has_analytic_gradient() const override {
    return f_->has_analytic_gradient();
  }
  Vec gradient(const Vec& t) const override {
    return Vec::Constant(1, f_->gradient(lift(t))[axis_]);
  }
  Mat hessian(const Vec& t) const override {
    Mat h(1, 1);
    h(0, 0) = f_->hessian(lift(t))(axis_, axis_);
    return h;
  }

 private:
  Vec lift(const Vec& t) const {
    Vec y = base_;
    y[axis_] = t[0];
    return y;
  }
  FieldPtr f_;
  int axis_;
  Vec base_;
  Box box_;
};

class CallableField final : public ScalarField {
 public:
  CallableField(Box box, std::function<double(const Vec&)> v,
                std::function<Vec(const Vec&)> g,
                std::function<Mat(const Vec&)> h)
      : box_(std::move(box)), v_(std::move(v)), g_(std::move(g)),
        h_(std::move(h)) {
    check_box(box_);
  }
  int dim() const override { return box_.dim(); }
  const Box& domain() const override { return box_; }
  double value(const Vec& y) const override { return v_(y); }
  bool has_analytic_gradient() const override { return static_cast<bool>(g_); }
  Vec gradient(const Vec& y) const override {
    if (!g_) return ScalarField::gradient(y);
    return g_(y);
  }
  Mat hessian(const Vec& y) const override {
    if (!h_) return ScalarField::hessian(y);
    return h_(y);
  }

 private:
  Box box_;
  std::function<double(const Vec&)> v_;
  std::function<Vec(const Vec&)> g_;
  std::function<Mat(const Vec&)> h_;
};

}  // namespace

FieldPtr constant_field(double value, Box box) {
  return std::make_shared<ConstantField>(value, std::move(box));
}

FieldPtr gaussian_bump_field(Vec center, double width, double base,
                             double amplitude, Box box) {
  return std::make_shared<GaussianBumpField>(std::move(center), width, base,
                                             amplitude, std::move(box));
}

FieldPtr gaussian_dip_field(Vec center, double width, double floor, Box box) {
  if (!(floor > 0.0 && floor <= 1.0))
    throw DomainMismatch("dip floor must be in (0, 1]");
  return gaussian_bump_field(std::move(center), width, 1.0, floor - 1.0,
                             std::move(box));
}

FieldPtr smooth_ramp_field(Vec direction, double offset, double width,
                           double lo, double hi, Box box) {
  return std::make_shared<SmoothRampField>(std::move(direction), offset, width,
                                           lo, hi, std::move(box));
}

FieldPtr product_field(std::vector<FieldPtr> factors) {
  return std::make_shared<ProductField>(std::move(factors));
}

FieldPtr scaled_field(double c, FieldPtr f) {
  return std::make_shared<ScaledField>(c, std::move(f));
}

FieldPtr power_field(FieldPtr f, double p) {
  return std::make_shared<PowerField>(std::move(f), p);
}

FieldPtr sqrt_field(FieldPtr f) { return power_field(std::move(f), 0.5); }

FieldPtr reciprocal_field(FieldPtr f) {
  return power_field(std::move(f), -1.0);
}

FieldPtr arg_scaled_field(FieldPtr f, double a) {
  return std::make_shared<ArgScaledField>(std::move(f), a);
}

FieldPtr slice_field(FieldPtr f, int axis, Vec base) {
  return std::make_shared<SliceField>(std::move(f), axis, std::move(base));
}

FieldPtr callable_field(Box box, std::function<double(const Vec&)> value,
                        std::function<Vec(const Vec&)> grad,
                        std::function<Mat(const Vec&)> hess) {
  return std::make_shared<CallableField>(std::move(box), std::move(value),
                                         std::move(grad), std::move(hess));
}

void for_each_grid_point(const Box& box, int per_axis,
                         const std::function<void(const Vec&)>& fn) {
  if (per_axis < 2) throw InvalidGrid("grid density must be >= 2 per axis");
  const int d = box.dim();
  std::vector<int> idx(d, 0);
  Vec y(d);
  for (;;) {
    for (int i = 0; i < d; ++i)
      y[i] = box.lo[i] +
             (box.hi[i] - box.lo[i]) * idx[i] / double(per_axis - 1);
    fn(y);
    int i = 0;
    for (; i < d; ++i) {
      if (++idx[i] < per_axis) break;
      idx[i] = 0;
    }
    if (i == d) return;
  }
}

double field_min_on(const ScalarField& f, const Box& box, int per_axis) {
  double m = std::numeric_limits<double>::infinity();
  for_each_grid_point(box, per_axis,
                      [&](const Vec& y) { m = std::min(m, f.value(y)); });
  return m;
}

double field_max_on(const ScalarField& f, const Box& box, int per_axis) {
  double m = -std::numeric_limits<double>::infinity();
  for_each_grid_point(box, per_axis,
                      [&](const Vec& y) { m = std::max(m, f.value(y)); });
  return m;
}

}  // namespace fastslow
