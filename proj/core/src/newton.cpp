#include "etacurv/newton.hpp"

namespace etacurv {

std::string to_string(NewtonFailureKind kind) {
  switch (kind) {
    case NewtonFailureKind::Diverged:
      return "NewtonDiverged";
    case NewtonFailureKind::ConeExit:
      return "ConeExit";
    case NewtonFailureKind::MaxIterations:
      return "MaxIterations";
    case NewtonFailureKind::SingularJacobian:
      return "SingularJacobian";
  }
  return "unknown";
}

}  // namespace etacurv
