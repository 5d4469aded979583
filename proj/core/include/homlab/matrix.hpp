#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace homlab {

/// Dense m x d real matrix, row-major. Gradients and the macroscopic slope xi
/// live here; the norm is Frobenius throughout.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  Matrix(int rows, int cols, std::vector<double> values);

  static Matrix zero(int rows, int cols) { return Matrix(rows, cols); }
  /// Matrix with a single unit entry at (row, col).
  static Matrix unit(int rows, int cols, int row, int col);

  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }

  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
  [[nodiscard]] std::span<double> values() noexcept { return data_; }

  [[nodiscard]] double frobenius() const noexcept;
  [[nodiscard]] bool all_finite() const noexcept;
  [[nodiscard]] bool is_zero() const noexcept;

  /// Every 2x2 minor vanishes relative to |M|^2 (numerical rank <= 1).
  [[nodiscard]] bool is_rank_at_most_one(double rel_tol = 1e-12) const noexcept;

  [[nodiscard]] std::string to_string() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// |xi Lambda|_F for Lambda = diag(diagonal): column j of xi scaled by diagonal[j].
[[nodiscard]] double column_scaled_norm(std::span<const double> xi, int cols, std::span<const double> diagonal);

/// Shortest round-trip decimal representation of a double.
[[nodiscard]] std::string format_double(double v);

}  // namespace homlab
