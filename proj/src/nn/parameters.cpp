#include "gvrnn/nn/parameters.hpp"

#include "gvrnn/error.hpp"

namespace gvrnn::nn {

void ParameterSet::add(const std::string& name, Matrix init) {
  if (entries_.count(name)) throw UsageError("duplicate parameter name " + name);
  Parameter p;
  p.first_moment = Matrix::Zero(init.rows(), init.cols());
  p.second_moment = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  entries_.emplace(name, std::move(p));
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw UsageError("no parameter named " + name);
  return it->second;
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw UsageError("no parameter named " + name);
  return it->second;
}

const Matrix& ParameterSet::value(const std::string& name) const { return at(name).value; }
Matrix& ParameterSet::value(const std::string& name) { return at(name).value; }

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : entries_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto it = other.entries_.begin();
  for (const auto& [name, p] : entries_) {
    const auto& q = (it++)->second;
    if (name != std::prev(it)->first || p.steps != q.steps) return false;
    if (p.value.rows() != q.value.rows() || p.value.cols() != q.value.cols()) return false;
    if (p.value != q.value || p.first_moment != q.first_moment || p.second_moment != q.second_moment) return false;
  }
  return true;
}

Gradients zero_gradients(const ParameterSet& params) {
  Gradients g;
  for (const auto& [name, p] : params.entries()) g.emplace(name, Matrix::Zero(p.value.rows(), p.value.cols()));
  return g;
}

}  // namespace gvrnn::nn
