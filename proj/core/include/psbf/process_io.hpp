#pragma once

#include <stdexcept>
#include <string>

#include "psbf/dbn.hpp"

namespace psbf {

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Canonical text form of a process: fixed field order, two-space indentation,
// shortest round-trip decimals, one trailing newline. Writing a parsed
// writer-produced document reproduces it byte for byte.
std::string write_process(const Process& process);

// Strict parser: unknown fields, malformed node handles, unknown variable
// names, and table-shape mismatches raise ParseError. Probabilistic validity
// (row sums, edge classes) is validate_process's job, not the parser's.
Process parse_process(const std::string& text);

void save_process(const Process& process, const std::string& path);
Process load_process(const std::string& path);

}  // namespace psbf
