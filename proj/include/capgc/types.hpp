#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace capgc {

using Slot = std::uint32_t;
using Generation = std::uint32_t;
using CompartmentId = std::uint32_t;

/// Handle to one arena slot. Valid iff `generation` equals the slot's
/// current generation; slots are never moved, so a live object's slot
/// index is stable for its whole life.
struct ObjectRef {
    Slot slot = 0;
    Generation generation = 0;

    friend auto operator<=>(const ObjectRef&, const ObjectRef&) = default;
};

/// Compartment brand carried by a managed reference: either a named
/// compartment or the wildcard ("somewhere") used for heterogeneous
/// collections. Wildcard-branded refs cannot be accessed until their
/// compartment is entered under a name again.
class CompartmentTag {
public:
    static CompartmentTag known(CompartmentId id) { return CompartmentTag(true, id); }
    static CompartmentTag somewhere() { return CompartmentTag(false, 0); }

    bool is_known() const { return known_; }
    bool is_wildcard() const { return !known_; }

    CompartmentId id() const {
        if (!known_) throw std::logic_error("CompartmentTag::id on wildcard tag");
        return id_;
    }

    friend bool operator==(const CompartmentTag&, const CompartmentTag&) = default;

private:
    CompartmentTag(bool known, CompartmentId id) : known_(known), id_(id) {}

    bool known_;
    CompartmentId id_;
};

enum class Fault {
    UseAfterFree,
    OutOfMemory,
    CompartmentViolation,
    NoCompartment,
    WildcardAccess,
    AccessForbidden,
    AlreadyActive,
    AlreadyInitialized,
    NotInitialized,
    NotEntered,
    RootOccupied,
    FinalizerReentrancy,
    CycleDetected,
    ConfigMismatch,
    TypeMismatch,
};

const char* to_string(Fault f);

/// Every dynamic discipline check reports through this exception. A
/// Violation escaping a correct program marks a bug in the caller's use
/// of the API (or, for CompartmentViolation, a broken tracer).
class Violation : public std::runtime_error {
public:
    Violation(Fault fault, const std::string& detail)
        : std::runtime_error(std::string(to_string(fault)) + ": " + detail), fault_(fault) {}

    Fault fault() const { return fault_; }

private:
    Fault fault_;
};

[[noreturn]] inline void raise(Fault fault, const std::string& detail) {
    throw Violation(fault, detail);
}

} // namespace capgc
