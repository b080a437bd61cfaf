#include "promptopt/errors.hpp"

#include <fmt/format.h>

namespace promptopt {

ConfigError::ConfigError(std::string field, const std::string& constraint)
    : Error(fmt::format("invalid config: {} ({})", field, constraint)), field_(std::move(field)) {}

ParseError::ParseError(std::size_t line, std::string reason)
    : Error(fmt::format("parse error at line {}: {}", line, reason)), line_(line), reason_(std::move(reason)) {}

}  // namespace promptopt
