#ifndef BDPCA_LOG_HPP
#define BDPCA_LOG_HPP

#include <functional>
#include <string>

namespace bdpca {

enum class LogLevel : int { Info = 0, Warning = 1 };

using LogSink = std::function<void(LogLevel, const std::string&)>;

// Replaces the process-wide sink. An empty sink restores the stderr default.
void set_log_sink(LogSink sink);

void log_message(LogLevel level, const std::string& msg);

inline void warn(const std::string& msg) { log_message(LogLevel::Warning, msg); }
inline void info(const std::string& msg) { log_message(LogLevel::Info, msg); }

}  // namespace bdpca

#endif  // BDPCA_LOG_HPP
