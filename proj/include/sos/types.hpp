#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sos {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Error categories map one-to-one onto the CLI exit codes (2, 3, 4).
enum class ErrorKind { Usage, Data, Solver };

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, std::string code, const std::string& what)
        : std::runtime_error(what), kind_(kind), code_(std::move(code))
    {}

    ErrorKind kind() const noexcept { return kind_; }

    // Short machine-parsable reason, e.g. "trivial_direction".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

struct UsageError : Error
{
    UsageError(std::string code, const std::string& what)
        : Error(ErrorKind::Usage, std::move(code), what)
    {}
};

struct DataError : Error
{
    DataError(std::string code, const std::string& what)
        : Error(ErrorKind::Data, std::move(code), what)
    {}
};

struct SolverError : Error
{
    SolverError(std::string code, const std::string& what)
        : Error(ErrorKind::Solver, std::move(code), what)
    {}
};

inline void check_dims(bool ok, const std::string& what)
{
    if (!ok) throw DataError("dimension_mismatch", what);
}

} // namespace sos
