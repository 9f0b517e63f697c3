#ifndef FRAGKIN_ERRORS_HPP
#define FRAGKIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fragkin {

// Pointwise evaluation of delta-distribution kernels; these are only usable
// through their discretized fragment weights.
class unsupported_operation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A kernel that violates its own model contract (e.g. divergent fragment
// count detected by quadrature non-convergence).
class model_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fixed-point iteration exhausted its iteration budget. Carries the last
// measured iterate difference and the geometric bound k^alpha * d0 the
// contraction estimate predicted for that iteration count.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, double last_difference, double predicted_bound)
        : std::runtime_error(what),
          last_difference(last_difference),
          predicted_bound(predicted_bound) {}

    double last_difference;
    double predicted_bound;
};

// Scenario file problem, addressed to a line and field so the CLI can point
// at the offending entry.
class config_error : public std::runtime_error {
public:
    config_error(const std::string& message, int line = 0, std::string field = {})
        : std::runtime_error(format(message, line, field)),
          line(line),
          field(std::move(field)) {}

    int line;
    std::string field;

private:
    static std::string format(const std::string& message, int line, const std::string& field) {
        std::string s;
        if (line > 0) s += "line " + std::to_string(line) + ": ";
        if (!field.empty()) s += "[" + field + "] ";
        return s + message;
    }
};

}  // namespace fragkin

#endif
