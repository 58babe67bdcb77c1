#pragma once

#include <string>
#include <vector>

namespace martkit {

// A named column of numbers ready for emission.  The err column carries the
// standard error for Monte Carlo cells and the tolerance for exact cells.
struct Series {
    std::string name;
    std::vector<double> values;
    std::vector<double> errs;

    void push(double value, double err) {
        values.push_back(value);
        errs.push_back(err);
    }
};

enum class Verdict {
    Satisfied,             // series terminates exactly (zero tail)
    SatisfiedWithTailBound,  // partial sum plus a certified finite tail
    Inconclusive,          // no certificate, or the literal series diverges
};

const char* to_string(Verdict verdict);

// Evaluation record of one summability criterion: partial sums by truncation,
// a certified bound on the omitted tail, and the resulting verdict.
struct CriterionReport {
    std::string name;
    std::vector<double> partial_sums;
    double tail_bound = 0.0;  // +inf when no certificate exists
    Verdict verdict = Verdict::Inconclusive;
    std::vector<Series> detail;  // op-specific extras (profiles, term lists)
    std::string note;            // conventions used, boundary-case remarks

    // Certified value: last partial sum plus the tail bound.
    double value() const {
        return (partial_sums.empty() ? 0.0 : partial_sums.back()) + tail_bound;
    }
};

}  // namespace martkit
