// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trimask {

enum class ErrorCode {
    MalformedTrace,
    DimensionMismatch,
    NonFiniteValue,
    NonConsecutiveSteps,
    IoFailure,
    InvalidThresholds,
    InvalidConfig,
    TooFewPatches,
    AllDegenerate,
    OutOfOrderUpdate,
    PatchCountChanged,
    StateMismatch,
    RateOutOfRange,
    InvalidSpec,
    NonSquarePatchCount,
    ShapeMismatch,
    ClosedHandle,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedTrace: return "MalformedTrace";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::NonConsecutiveSteps: return "NonConsecutiveSteps";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::InvalidThresholds: return "InvalidThresholds";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::TooFewPatches: return "TooFewPatches";
        case ErrorCode::AllDegenerate: return "AllDegenerate";
        case ErrorCode::OutOfOrderUpdate: return "OutOfOrderUpdate";
        case ErrorCode::PatchCountChanged: return "PatchCountChanged";
        case ErrorCode::StateMismatch: return "StateMismatch";
        case ErrorCode::RateOutOfRange: return "RateOutOfRange";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::NonSquarePatchCount: return "NonSquarePatchCount";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::ClosedHandle: return "ClosedHandle";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
/// The message is prefixed with the code name so CLI diagnostics are greppable.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

}  // namespace trimask
