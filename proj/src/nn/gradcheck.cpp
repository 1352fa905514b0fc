#include "gvrnn/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gvrnn/error.hpp"

namespace gvrnn::nn {

GradCheckReport gradient_check(const LossFn& loss_fn, const ParameterSet& params, Rng& rng,
                               const GradCheckOptions& opts) {
  Gradients analytic;
  loss_fn(params, &analytic);

  std::vector<const std::string*> names;
  std::vector<std::size_t> ends;
  std::size_t total = 0;
  for (const auto& [name, p] : params.entries()) {
    total += static_cast<std::size_t>(p.value.size());
    names.push_back(&name);
    ends.push_back(total);
  }
  if (total == 0) throw UsageError("gradient_check: no parameters");

  GradCheckReport report;
  ParameterSet work = params;
  for (int probe = 0; probe < opts.probes; ++probe) {
    const auto flat = static_cast<std::size_t>(rng.below(total));
    const auto slot = static_cast<std::size_t>(std::upper_bound(ends.begin(), ends.end(), flat) - ends.begin());
    const std::string& name = *names[slot];
    const auto index = static_cast<Eigen::Index>(flat - (slot ? ends[slot - 1] : 0));

    double& x = work.value(name).data()[index];
    const double saved = x;
    x = saved + opts.step;
    const double up = loss_fn(work, nullptr);
    x = saved - opts.step;
    const double down = loss_fn(work, nullptr);
    x = saved;

    const double numeric = (up - down) / (2.0 * opts.step);
    const double a = analytic.at(name).data()[index];
    const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.probes;
    if (rel > report.max_rel_error || report.worst_index < 0) {
      report.max_rel_error = std::max(rel, report.max_rel_error);
      report.worst_param = name;
      report.worst_index = index;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace gvrnn::nn
