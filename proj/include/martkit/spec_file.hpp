#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "martkit/chain.hpp"

namespace martkit {

// Run-shaping options carried by a spec file; flags may override them.
struct RunOptions {
    std::vector<int> m_grid = {1, 2, 4, 8, 16, 32, 64};
    std::vector<int> n_grid = {128, 256, 512, 1024, 2048, 4096, 8192, 16384};
    int replicas = 4000;
    std::uint64_t seed = 42;
};

// A parsed and validated chain specification.
struct ChainSpec {
    FiniteMarkovChain chain;
    Observable observable;
    std::vector<std::string> labels;  // optional state names
    RunOptions options;
    std::vector<std::string> warnings;
    std::uint64_t digest = 0;  // FNV-1a of the canonical serialization
};

// Parses the line-oriented spec format ('#' starts a comment):
//
//   states 2
//   labels up down
//   kernel
//   0.7 0.3
//   0.1 0.9
//   observable
//   3 -1
//   m-grid 1 2 4
//   n-grid 128 1024
//   replicas 4000
//   seed 42
//
// Uncentered observables are centered with a warning.  Malformed input
// throws ParseError with a line-anchored message; kernel validation failures
// surface as ValidationError.
ChainSpec parse_chain_spec(const std::string& path);
ChainSpec parse_chain_spec_text(const std::string& text, const std::string& origin);

// Canonical serialization; parsing it back reproduces the same digest.
std::string format_chain_spec(const ChainSpec& spec);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace martkit
