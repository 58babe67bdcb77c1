#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "martkit/series.hpp"
#include "martkit/spec_file.hpp"

namespace martkit {

enum class OutputFormat { Csv, Text };

// Result of one analysis command: emission-ready series plus human verdict
// lines.  Wall-clock goes to the console only, so emitted files stay
// byte-identical across runs.
struct RunReport {
    std::string command;
    std::uint64_t digest = 0;
    std::vector<Series> series;
    std::vector<std::string> verdicts;
    int suite_failures = 0;  // negative margins / failed distribution checks
    double wall_seconds = 0.0;
};

// Commands: inspect, approx, criteria, spectral, inequalities, fclt, report.
RunReport run(const std::string& command, const ChainSpec& spec);

// Writes <command>.csv or <command>.txt under out_dir; returns the paths.
std::vector<std::string> emit(const RunReport& report, const std::string& out_dir,
                              OutputFormat format);

void write_csv(const RunReport& report, std::ostream& out);
void write_text(const RunReport& report, std::ostream& out);

}  // namespace martkit
