#include "homcrb/log.hpp"

#include <cstdlib>
#include <mutex>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "homcrb/error.hpp"

namespace homcrb {

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("homcrb");
    instance->set_pattern("[%l] %v");
    instance->set_level(spdlog::level::err);
    if (const char* env = std::getenv("HOMCRB_LOG")) {
      const std::string v(env);
      if (v == "debug") instance->set_level(spdlog::level::debug);
      else if (v == "info") instance->set_level(spdlog::level::info);
    }
  });
  return instance;
}

}  // namespace

void init_logging() { logger(); }

void set_log_level(LogLevel level) {
  switch (level) {
    case LogLevel::Error: logger()->set_level(spdlog::level::err); break;
    case LogLevel::Info: logger()->set_level(spdlog::level::info); break;
    case LogLevel::Debug: logger()->set_level(spdlog::level::debug); break;
  }
}

void log_error(std::string_view message) { logger()->error("{}", message); }
void log_info(std::string_view message) { logger()->info("{}", message); }
void log_debug(std::string_view message) { logger()->debug("{}", message); }

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Dimension: return "dimension";
    case ErrorCode::NotInAlgebra: return "not-in-algebra";
    case ErrorCode::NearCutLocus: return "near-cut-locus";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::BasisClosure: return "basis-closure";
    case ErrorCode::Evaluation: return "evaluation";
    case ErrorCode::Subalgebra: return "subalgebra";
    case ErrorCode::DegenerateSeed: return "degenerate-seed";
    case ErrorCode::NotReductive: return "not-reductive";
    case ErrorCode::LiftFailure: return "lift-failure";
    case ErrorCode::CutLocus: return "cut-locus";
    case ErrorCode::UnsupportedMethod: return "unsupported-method";
    case ErrorCode::DegenerateModel: return "degenerate-model";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

}  // namespace homcrb
