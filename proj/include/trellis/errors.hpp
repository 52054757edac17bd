#pragma once

#include "trellis/value.hpp"

#include <stdexcept>
#include <string>

namespace trellis {

enum class Errc {
    UnknownArchetype,
    MissingNode,
    MissingEdge,
    NoSuchEdge,
    IsolationViolation,
    WalkerNotActive,
    WalkersActive,
    DuplicateEntryPoint,
    UnknownEntryPoint,
    ValidationFailure,
    WalkerFault,
    IoFailure,
    CorruptImage,
    VersionMismatch,
    CapacityExceeded,
    InsufficientMachines,
    MachineDead,
    MachineAlreadyDead,
    UnavailableNode,
    NoCheckpoint,
    WalkerNotLost,
    BadConfig,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::UnknownArchetype: return "UnknownArchetype";
    case Errc::MissingNode: return "MissingNode";
    case Errc::MissingEdge: return "MissingEdge";
    case Errc::NoSuchEdge: return "NoSuchEdge";
    case Errc::IsolationViolation: return "IsolationViolation";
    case Errc::WalkerNotActive: return "WalkerNotActive";
    case Errc::WalkersActive: return "WalkersActive";
    case Errc::DuplicateEntryPoint: return "DuplicateEntryPoint";
    case Errc::UnknownEntryPoint: return "UnknownEntryPoint";
    case Errc::ValidationFailure: return "ValidationFailure";
    case Errc::WalkerFault: return "WalkerFault";
    case Errc::IoFailure: return "IoFailure";
    case Errc::CorruptImage: return "CorruptImage";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::InsufficientMachines: return "InsufficientMachines";
    case Errc::MachineDead: return "MachineDead";
    case Errc::MachineAlreadyDead: return "MachineAlreadyDead";
    case Errc::UnavailableNode: return "UnavailableNode";
    case Errc::NoCheckpoint: return "NoCheckpoint";
    case Errc::WalkerNotLost: return "WalkerNotLost";
    case Errc::BadConfig: return "BadConfig";
    }
    return "?";
}

/// All runtime failures carry a code plus an optional structured detail
/// payload (e.g. per-parameter validation messages).
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message, Value detail = nullptr)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          detail_(std::move(detail)) {}

    Errc code() const { return code_; }
    const Value& detail() const { return detail_; }

private:
    Errc code_;
    Value detail_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message, Value detail = nullptr) {
    throw Error(code, message, std::move(detail));
}

}  // namespace trellis
