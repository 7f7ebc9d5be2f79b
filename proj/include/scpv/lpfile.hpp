#pragma once

// CPLEX LP text for VerificationProgram. Products are quadratic equality rows
// `w - [ a * b ] = 0`; implications are written as big-M rows over the declared bounds and
// described again in comment lines so the reader can rebuild them.

#include "scpv/program.hpp"

#include <stdexcept>
#include <string>

namespace scpv {

struct LPParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Characters outside the LP name alphabet become '_'.
std::string lp_name(const std::string& name);

std::string to_lp(const VerificationProgram& prog);
void write_lp(const VerificationProgram& prog, const std::string& path);

VerificationProgram parse_lp(const std::string& text);
VerificationProgram read_lp(const std::string& path);

}  // namespace scpv
