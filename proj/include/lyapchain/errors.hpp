#pragma once

#include <stdexcept>
#include <string>

namespace lyapchain {

/// Base for failures that correspond to a FAIL-type report rather than a usage error.
struct ReportFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CalibrationFailed : ReportFailure {
  using ReportFailure::ReportFailure;
};

struct EnvelopeDegenerate : ReportFailure {
  EnvelopeDegenerate(const std::string& what, double level) : ReportFailure(what), level(level) {}
  double level;
};

struct ThresholdViolation : ReportFailure {
  using ReportFailure::ReportFailure;
};

struct StepUnderflow : std::runtime_error {
  StepUnderflow(const std::string& what, double t) : std::runtime_error(what), t(t) {}
  double t;
};

/// Config schema violation; the message carries the field path and line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lyapchain
