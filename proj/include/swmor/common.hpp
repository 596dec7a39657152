#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace swmor {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr Index kDenseLimit = 500;
inline constexpr int kNuMax = 10;

// Every library failure derives from Error. The category drives CLI exit codes.
enum class ErrorCategory { Validation, NonConvergence, Io };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), cat_(cat), module_(module) {}
    ErrorCategory category() const noexcept { return cat_; }
    const std::string& module() const noexcept { return module_; }

private:
    ErrorCategory cat_;
    std::string module_;
};

#define SWMOR_DEFINE_ERROR(Name, Cat)                                   \
    class Name : public Error {                                         \
    public:                                                             \
        Name(const std::string& module, const std::string& what)        \
            : Error(ErrorCategory::Cat, module, #Name ": " + what) {}   \
    };

SWMOR_DEFINE_ERROR(DimensionMismatch, Validation)
SWMOR_DEFINE_ERROR(NotRegular, Validation)
SWMOR_DEFINE_ERROR(ToleranceFailure, Validation)
SWMOR_DEFINE_ERROR(SingularTransform, Validation)
SWMOR_DEFINE_ERROR(NonPositiveDelta, Validation)
SWMOR_DEFINE_ERROR(EmptyDifferentialPart, Validation)
SWMOR_DEFINE_ERROR(MissingCertificate, Validation)
SWMOR_DEFINE_ERROR(TooLargeForDenseCheck, Validation)
SWMOR_DEFINE_ERROR(SingularOperator, Validation)
SWMOR_DEFINE_ERROR(UnstableA, Validation)
SWMOR_DEFINE_ERROR(MissingDerivative, Validation)
SWMOR_DEFINE_ERROR(GridMismatch, Validation)
SWMOR_DEFINE_ERROR(RegularityRepairFailed, Validation)
SWMOR_DEFINE_ERROR(InsufficientHistory, Validation)
SWMOR_DEFINE_ERROR(InvalidArgument, Validation)
SWMOR_DEFINE_ERROR(StagnationError, NonConvergence)
SWMOR_DEFINE_ERROR(MaxDimExceeded, NonConvergence)
SWMOR_DEFINE_ERROR(NotConverged, NonConvergence)
SWMOR_DEFINE_ERROR(IntegratorFailure, NonConvergence)
SWMOR_DEFINE_ERROR(IoError, Io)

#undef SWMOR_DEFINE_ERROR

inline double default_rank_tol(Index n) { return static_cast<double>(n) * kEps * 64.0; }

}  // namespace swmor
