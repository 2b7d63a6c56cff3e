#ifndef ACCMV_ERRORS_HPP
#define ACCMV_ERRORS_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace accmv {

// Broad failure class; the CLI maps each one to a distinct exit code.
enum class ErrorCategory { argument, config, data, fit, inference };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& what) : Error(ErrorCategory::argument, what) {}
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& what) : Error(ErrorCategory::argument, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

// Requesting an outcome-model based method for a marginal parametric model.
struct CongenialityError : ConfigError {
  explicit CongenialityError(const std::string& what) : ConfigError(what) {}
};

struct ParseError : Error {
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(ErrorCategory::data, what), row(row), column(column) {}
  std::size_t row;
  std::size_t column;
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

struct FitError : Error {
  explicit FitError(const std::string& what) : Error(ErrorCategory::fit, what) {}
};

struct PositivityError : FitError {
  explicit PositivityError(const std::string& what) : FitError(what) {}
};

struct SampleSizeError : FitError {
  explicit SampleSizeError(const std::string& what) : FitError(what) {}
};

struct SeparationError : FitError {
  explicit SeparationError(const std::string& what) : FitError(what) {}
};

struct SingularityError : FitError {
  explicit SingularityError(const std::string& what) : FitError(what) {}
};

struct NonConvergenceError : FitError {
  NonConvergenceError(const std::string& what, Eigen::VectorXd last_iterate)
      : FitError(what), last_iterate(std::move(last_iterate)) {}
  Eigen::VectorXd last_iterate;
};

struct InferenceError : Error {
  explicit InferenceError(const std::string& what) : Error(ErrorCategory::inference, what) {}
};

struct DegenerateNormalizationError : InferenceError {
  explicit DegenerateNormalizationError(const std::string& what) : InferenceError(what) {}
};

struct BootstrapInstabilityError : InferenceError {
  BootstrapInstabilityError(const std::string& what, int failed, int total)
      : InferenceError(what), failed(failed), total(total) {}
  int failed;
  int total;
};

}  // namespace accmv

#endif  // ACCMV_ERRORS_HPP
