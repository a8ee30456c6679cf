#pragma once

#include <string>
#include <vector>

#include "psbf/dbn.hpp"

namespace psbf {

// CPT rows must sum to 1 within this tolerance.
inline constexpr double kRowSumTol = 1e-9;

struct ValidationIssue {
  std::string code;     // stable machine-readable class, e.g. "edge-class"
  std::string message;  // human-readable detail
};

// Structural and numeric checks for one action network:
//   edge-class        edge outside the four admissible classes
//   edge-range        edge endpoint index out of range
//   cycle             intra-slice subgraph (t+1 state + obs) has a cycle
//   cpt-missing       t+1 state or obs node without a table
//   cpt-child         table child mismatch (wrong node or domain)
//   cpt-parents       parent list disagrees with the edge list, duplicates,
//                     or cached parent domains are wrong
//   cpt-shape         table size != rows * child_domain
//   prob-range        entry outside [0, 1]
//   row-normalization row sum differs from 1 by more than kRowSumTol
//   var-spec          bad variable declaration (empty/duplicate name, domain < 1)
std::vector<ValidationIssue> validate_dbn(const ActionDbn& dbn);

// validate_dbn for every action plus cross-action consistency (identical
// variable declarations, unique action names) and stored-clustering checks
// (each named clustering must partition the state variables).
std::vector<ValidationIssue> validate_process(const Process& process);

}  // namespace psbf
