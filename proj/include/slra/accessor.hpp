#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "slra/error.hpp"

namespace slra {

/// Read-only view of a dense matrix that records every entry it hands out.
///
/// All raw-matrix reads made by the sketching code go through one of these,
/// which is what lets tests and the audit command reason about how much of
/// the input an algorithm actually touched. Not thread-safe: each concurrent
/// run owns its own accessor.
class CountingAccessor {
 public:
  using Index = Eigen::Index;

  explicit CountingAccessor(const Eigen::MatrixXd& target)
      : target_(&target),
        seen_(static_cast<std::size_t>(target.rows() * target.cols()), false) {}

  // The accessor refers to `target`; binding a temporary would dangle.
  explicit CountingAccessor(Eigen::MatrixXd&&) = delete;

  Index rows() const noexcept { return target_->rows(); }
  Index cols() const noexcept { return target_->cols(); }

  double operator()(Index i, Index j) {
    if (i < 0 || i >= rows() || j < 0 || j >= cols())
      throw DimensionError("CountingAccessor: index out of range");
    record(i, j);
    return (*target_)(i, j);
  }

  /// Row `i` as a dense row vector; counts n reads.
  Eigen::RowVectorXd row(Index i) {
    if (i < 0 || i >= rows()) throw DimensionError("CountingAccessor: row out of range");
    for (Index j = 0; j < cols(); ++j) record(i, j);
    return target_->row(i);
  }

  /// Column `j` as a dense vector; counts m reads.
  Eigen::VectorXd col(Index j) {
    if (j < 0 || j >= cols()) throw DimensionError("CountingAccessor: column out of range");
    for (Index i = 0; i < rows(); ++i) record(i, j);
    return target_->col(j);
  }

  /// Every entry; counts m*n reads.
  Eigen::MatrixXd read_all() {
    for (Index j = 0; j < cols(); ++j)
      for (Index i = 0; i < rows(); ++i) record(i, j);
    return *target_;
  }

  std::uint64_t distinct() const noexcept { return distinct_; }
  std::uint64_t total_reads() const noexcept { return total_; }

  bool accessed(Index i, Index j) const { return seen_[flat(i, j)]; }

  /// Some entry never read so far, scanning column-major; nullopt if all were read.
  std::optional<std::pair<Index, Index>> first_unaccessed() const {
    for (Index j = 0; j < cols(); ++j)
      for (Index i = 0; i < rows(); ++i)
        if (!seen_[flat(i, j)]) return std::pair{i, j};
    return std::nullopt;
  }

  void reset() {
    seen_.assign(seen_.size(), false);
    distinct_ = 0;
    total_ = 0;
  }

 private:
  std::size_t flat(Index i, Index j) const {
    return static_cast<std::size_t>(j * rows() + i);
  }

  void record(Index i, Index j) {
    ++total_;
    auto bit = seen_[flat(i, j)];
    if (!bit) {
      bit = true;
      ++distinct_;
    }
  }

  const Eigen::MatrixXd* target_;
  std::vector<bool> seen_;
  std::uint64_t distinct_ = 0;
  std::uint64_t total_ = 0;
};

}  // namespace slra
