#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sac
{

enum class ErrorKind
{
    DanglingNodeRef,
    StrategyViolation,
    SchemaViolation,
    DecodeError,
    UnknownAffordance,
    UnknownSource,
    BadPredicate,
    UnknownAction,
    ScriptMiss,
    SeqConflict,
    PipelineFault,
    StaleEvent,
    NoApp,
    NoSession,
    AssertionFailed,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

class DecodeError : public Error
{
public:
    DecodeError(std::size_t offset, const std::string& message)
        : Error(ErrorKind::DecodeError, "at byte " + std::to_string(offset) + ": " + message), offset_(offset)
    {
    }

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Pipeline stages as reported by PipelineFault.
enum class Stage
{
    intent,
    environment,
    agent,
    transition,
    qa,
    store,
};

std::string_view to_string(Stage stage) noexcept;

class PipelineFault : public Error
{
public:
    PipelineFault(Stage stage, ErrorKind cause, const std::string& message)
        : Error(ErrorKind::PipelineFault, std::string(to_string(stage)) + ": " + message), stage_(stage), cause_(cause)
    {
    }

    Stage stage() const noexcept { return stage_; }
    ErrorKind cause() const noexcept { return cause_; }

private:
    Stage stage_;
    ErrorKind cause_;
};

} // namespace sac
