#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace nest {

// Dense row-major matrix of doubles. Everything in the model is rank-2:
// scalars are 1x1, row vectors 1xn, column vectors nx1. Values are treated
// as immutable once a tensor has been recorded on a tape.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols);  // zero-filled
  Tensor(int rows, int cols, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor full(int rows, int cols, double v);
  static Tensor identity(int n);
  static Tensor row(std::vector<double> v);
  static Tensor column(std::vector<double> v);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<int> shape() const { return {rows_, cols_}; }
  std::string shape_str() const;

  double& at(int r, int c);
  double at(int r, int c) const;
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& mutable_data() { return data_; }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;
  // Value of a 1x1 tensor; ShapeError otherwise.
  double scalar_value() const;

  bool operator==(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace nest
