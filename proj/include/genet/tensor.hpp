#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "genet/common.hpp"

namespace genet {

// Process-wide payload accounting; feeds the bench module's peak-memory column.
struct MemoryStats {
  static std::atomic<int64_t>& current() {
    static std::atomic<int64_t> v{0};
    return v;
  }
  static std::atomic<int64_t>& peak() {
    static std::atomic<int64_t> v{0};
    return v;
  }
  static void on_alloc(int64_t bytes) {
    int64_t now = current().fetch_add(bytes) + bytes;
    int64_t p = peak().load();
    while (now > p && !peak().compare_exchange_weak(p, now)) {
    }
  }
  static void on_free(int64_t bytes) { current().fetch_sub(bytes); }
  static void reset_peak() { peak().store(current().load()); }
};

namespace detail {
struct Storage {
  explicit Storage(int64_t n) : data(static_cast<size_t>(n)) {
    MemoryStats::on_alloc(n * static_cast<int64_t>(sizeof(double)));
  }
  ~Storage() {
    MemoryStats::on_free(static_cast<int64_t>(data.size() * sizeof(double)));
  }
  Storage(const Storage&) = delete;
  Storage& operator=(const Storage&) = delete;
  std::vector<double> data;
};
}  // namespace detail

// Dense 64-bit tensor. Shapes are 1-D or 2-D; data is contiguous row-major.
// Values are immutable once an op has produced them; copies share storage.
// `id` is the position on the Tape that tracked this tensor (-1 = untracked).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.storage_ = std::make_shared<detail::Storage>(numel_of(t.shape_));
    return t;
  }

  static Tensor full(std::vector<int64_t> shape, double value) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.storage_->data) x = value;
    return t;
  }

  static Tensor from(std::vector<int64_t> shape, std::vector<double> values) {
    if (numel_of(shape) != static_cast<int64_t>(values.size()))
      throw ShapeError(cat("tensor init: shape wants ", numel_of(shape),
                           " values, got ", values.size()));
    Tensor t;
    t.shape_ = std::move(shape);
    t.storage_ = std::make_shared<detail::Storage>(
        static_cast<int64_t>(values.size()));
    t.storage_->data = std::move(values);
    return t;
  }

  static Tensor scalar(double v) { return from({1}, {v}); }

  bool defined() const { return storage_ != nullptr; }
  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim() const { return static_cast<int64_t>(shape_.size()); }
  int64_t numel() const { return numel_of(shape_); }
  bool is_scalar() const { return numel() == 1; }

  int64_t rows() const {
    if (dim() == 2) return shape_[0];
    if (dim() == 1) return shape_[0];
    throw ShapeError("rows(): tensor has no dimensions");
  }
  int64_t cols() const {
    if (dim() == 2) return shape_[1];
    if (dim() == 1) return 1;
    throw ShapeError("cols(): tensor has no dimensions");
  }

  const double* data() const { return storage_->data.data(); }
  // Construction-time escape hatch; never call on a tensor already handed out.
  double* mutable_data() { return storage_->data.data(); }

  double at(int64_t i) const { return storage_->data[static_cast<size_t>(i)]; }
  double at(int64_t r, int64_t c) const {
    return storage_->data[static_cast<size_t>(r * cols() + c)];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.storage_ = std::make_shared<detail::Storage>(numel());
    t.storage_->data = storage_->data;
    return t;
  }

  bool all_finite() const {
    for (double x : storage_->data)
      if (!std::isfinite(x)) return false;
    return true;
  }

  long id = -1;
  bool requires_grad = false;

 private:
  static int64_t numel_of(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) throw ShapeError("negative dimension");
      n *= d;
    }
    return n;
  }

  std::vector<int64_t> shape_;
  std::shared_ptr<detail::Storage> storage_;
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "[";
  for (size_t i = 0; i < t.shape().size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape()[i]);
  }
  return s + "]";
}

#ifdef NDEBUG
inline void debug_check_finite(const Tensor&, const char*) {}
#else
inline void debug_check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite())
    throw NumericError(cat(op, ": non-finite value in result ", shape_str(t)));
}
#endif

}  // namespace genet
