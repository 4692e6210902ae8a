#pragma once

#include <stdexcept>
#include <string>

namespace splatop {

class ReconError : public std::runtime_error {
 public:
  enum class Code { DegenerateRing, ParallelRays, InsufficientViews, SingularNormalEquations, MalformedPlan };
  ReconError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace splatop
