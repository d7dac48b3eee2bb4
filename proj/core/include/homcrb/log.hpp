#pragma once

#include <string_view>

namespace homcrb {

enum class LogLevel { Error, Info, Debug };

/// Reads HOMCRB_LOG (error | info | debug, default error) once.
void init_logging();
void set_log_level(LogLevel level);

void log_error(std::string_view message);
void log_info(std::string_view message);
void log_debug(std::string_view message);

}  // namespace homcrb
