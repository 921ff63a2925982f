#include "bdpca/error.hpp"
#include "bdpca/log.hpp"

#include <iostream>
#include <mutex>

namespace bdpca {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotPsd: return "NotPSD";
    case ErrorCode::ConvergenceError: return "ConvergenceError";
    case ErrorCode::PreconditionError: return "PreconditionError";
    case ErrorCode::CorruptMessage: return "CorruptMessage";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Timeout: return "Timeout";
  }
  return "Unknown";
}

namespace {

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

LogSink& sink_slot() {
  static LogSink sink;
  return sink;
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink_slot() = std::move(sink);
}

void log_message(LogLevel level, const std::string& msg) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink_slot()) {
    sink_slot()(level, msg);
    return;
  }
  std::cerr << (level == LogLevel::Warning ? "warning: " : "") << msg << '\n';
}

}  // namespace bdpca
