#include "capgc/context.hpp"

#include <string>

namespace capgc::detail {

void ContextCore::require_current(std::size_t depth) const {
    if (depth != frames.size() - 1)
        raise(Fault::AlreadyActive,
              "context is suspended while a nested context is active (depth " +
                  std::to_string(depth) + " of " + std::to_string(frames.size() - 1) + ")");
}

void ContextCore::require_no_views() const {
    if (active_reads > 0 || active_writes > 0)
        raise(Fault::AlreadyActive,
              "operation needs the exclusive grant but " +
                  std::to_string(active_reads) + " read and " +
                  std::to_string(active_writes) + " write views are outstanding");
}

void ContextCore::require_no_writes() const {
    if (active_writes > 0)
        raise(Fault::AlreadyActive, "an exclusive view is outstanding");
}

void ContextCore::require_can_access() const {
    if (!frames.back().can_access)
        raise(Fault::AccessForbidden,
              "context cannot access data in this state (compartment initializing)");
}

void ContextCore::require_can_alloc() const {
    if (!frames.back().can_alloc)
        raise(Fault::AccessForbidden, "context lacks allocation permission");
}

CompartmentId ContextCore::require_known_compartment() const {
    const Frame& f = frames.back();
    if (f.comp.kind != CurrentComp::Known)
        raise(Fault::NoCompartment,
              f.comp.kind == CurrentComp::Wildcard
                  ? "current compartment is the wildcard, not a named compartment"
                  : "no current compartment");
    return f.comp.id;
}

void ContextCore::pre_manage(std::size_t depth) const {
    require_current(depth);
    require_no_views();
    require_can_alloc();
}

void ContextCore::pre_access(std::size_t depth) const {
    require_current(depth);
    require_can_access();
    require_no_writes();
}

void ContextCore::pre_access_exclusive(std::size_t depth) const {
    require_current(depth);
    require_can_access();
    require_no_views();
}

void ContextCore::pre_collect(std::size_t depth) const {
    require_current(depth);
    require_no_views();
}

void ContextCore::pre_enter(std::size_t depth) const {
    require_current(depth);
    require_no_views();
    require_can_access();
    require_can_alloc();
}

CompartmentId ContextCore::pre_global_manage(std::size_t depth) const {
    require_current(depth);
    require_no_views();
    const Frame& f = frames.back();
    if (f.comp.kind != CurrentComp::Known)
        raise(Fault::NoCompartment, "no compartment to initialize");
    if (!f.initializing)
        raise(Fault::AlreadyInitialized,
              "compartment " + std::to_string(f.comp.id) + " is already initialized");
    return *f.initializing;
}

} // namespace capgc::detail
