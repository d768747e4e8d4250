#pragma once

#include <stdexcept>
#include <string>

namespace bargaining {

enum class ErrorKind {
  Domain,          // argument outside the mathematical domain
  Numeric,         // non-finite intermediate value
  Infeasible,      // target not reachable (e.g. inverse below headstart)
  Bracket,         // root not bracketed where theory says it must be
  NoCandidate,     // boundary inequality of the aggregate-output step violated
  Divergence,      // geometric bracket growth passed its hard cap
  Resolution,      // grid too coarse to locate a sign change
  Classification,  // partition inconsistent with the voting rule
  Fill,            // coalition transportation problem infeasible
  Inconsistency,   // input equilibrium contradicts a proven inequality
  Oracle,          // independent oracle failed to converge
  Input,           // malformed scenario / CLI input
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bargaining
