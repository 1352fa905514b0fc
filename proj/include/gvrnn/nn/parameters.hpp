#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Dense>

namespace gvrnn::nn {

/// Every tensor in the network is a 2-D double matrix; batch rows, feature
/// columns. Weights are stored in x out so a layer is `x * W + b`, and biases
/// are 1 x out.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Parameter {
  Matrix value;
  Matrix first_moment;
  Matrix second_moment;
  std::int64_t steps = 0;
};

using Gradients = std::map<std::string, Matrix>;

/// Named learnable tensors plus their Adam state. Ordered by name so that
/// iteration (and therefore serialization and reductions) is deterministic.
class ParameterSet {
 public:
  void add(const std::string& name, Matrix init);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Matrix& value(const std::string& name) const;
  Matrix& value(const std::string& name);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  const std::map<std::string, Parameter>& entries() const { return entries_; }
  std::map<std::string, Parameter>& entries() { return entries_; }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  bool operator==(const ParameterSet& other) const;

 private:
  std::map<std::string, Parameter> entries_;
};

Gradients zero_gradients(const ParameterSet& params);

}  // namespace gvrnn::nn
