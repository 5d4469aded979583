#include "homlab/matrix.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace homlab {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative shape");
}

Matrix::Matrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows < 0 || cols < 0 || data_.size() != static_cast<std::size_t>(rows * cols))
    throw std::invalid_argument("Matrix: value count does not match shape");
}

Matrix Matrix::unit(int rows, int cols, int row, int col) {
  Matrix m(rows, cols);
  m(row, col) = 1.0;
  return m;
}

double Matrix::frobenius() const noexcept {
  double s = 0.0;
  for (const double v : data_) s += v * v;
  return std::sqrt(s);
}

bool Matrix::all_finite() const noexcept {
  for (const double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool Matrix::is_zero() const noexcept {
  for (const double v : data_)
    if (v != 0.0) return false;
  return true;
}

bool Matrix::is_rank_at_most_one(double rel_tol) const noexcept {
  const double scale = frobenius();
  if (scale == 0.0) return true;
  const double bound = rel_tol * scale * scale;
  for (int i = 0; i < rows_; ++i)
    for (int k = i + 1; k < rows_; ++k)
      for (int j = 0; j < cols_; ++j)
        for (int l = j + 1; l < cols_; ++l) {
          const double minor = (*this)(i, j) * (*this)(k, l) - (*this)(i, l) * (*this)(k, j);
          if (std::abs(minor) > bound) return false;
        }
  return true;
}

std::string Matrix::to_string() const {
  std::string out = "[";
  for (int i = 0; i < rows_; ++i) {
    if (i) out += ";";
    for (int j = 0; j < cols_; ++j) {
      if (j) out += " ";
      out += format_double((*this)(i, j));
    }
  }
  return out + "]";
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("Matrix: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("Matrix: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double column_scaled_norm(std::span<const double> xi, int cols, std::span<const double> diagonal) {
  double s = 0.0;
  for (std::size_t idx = 0; idx < xi.size(); ++idx) {
    const double v = xi[idx] * diagonal[idx % static_cast<std::size_t>(cols)];
    s += v * v;
  }
  return std::sqrt(s);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace homlab
