#ifndef PIPESCHED_EXTRACT_HPP
#define PIPESCHED_EXTRACT_HPP

#include <stdexcept>

#include "pipesched/model.hpp"
#include "pipesched/schedule.hpp"
#include "pipesched/solver.hpp"

namespace pipesched {

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds the physical schedule encoded by a solution of `build_model(s)`.
/// Dummy runs and fictitious batches are dropped; volumes below 1e-6 * PV are
/// treated as zero. Throws ExtractionError when the solution carries no values
/// or a binary is further than 1e-5 from 0 or 1.
Schedule extract_schedule(const Solution& sol, const ModelInstance& m, const Scenario& s);

}  // namespace pipesched

#endif  // PIPESCHED_EXTRACT_HPP
