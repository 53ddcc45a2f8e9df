#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <typeinfo>
#include <vector>

#include "capgc/roots.hpp"
#include "capgc/tracing.hpp"
#include "capgc/types.hpp"

namespace capgc {

struct ObjectHeader {
    CompartmentId compartment = 0; // immutable after allocation
    Generation generation = 0;
    bool marked = false; // false outside an active collection cycle
    bool is_global = false;
};

struct CollectionStats {
    std::size_t live = 0;
    std::size_t freed = 0;
    std::size_t compartments_swept = 0;
    std::size_t finalizers_run = 0;
};

struct HeapTotals {
    std::uint64_t collections = 0;
    std::uint64_t allocations = 0;
    std::uint64_t freed = 0;
    std::uint64_t finalizers = 0;
};

struct HeapConfig {
    std::size_t capacity = 4096;
    std::size_t threshold = 64; // allocations between automatic collections
    bool zeal = false;          // collect on every allocation
};

/// Non-moving slot arena with a mark-and-sweep collector.
///
/// Every slot is either vacant (on the free list, payload destroyed and
/// poisoned) or occupied (valid header plus payload). Objects never
/// move; a slot's generation increases on every allocation and sweep,
/// so a stale ObjectRef can always be told apart from the slot's
/// current tenant.
///
/// The heap is the engine underneath the Context capability: it checks
/// reference validity and compartment containment, but the grant
/// discipline (who may allocate, access or collect, and when) lives in
/// the context layer. A Heap is confined to the thread that created it.
class Heap {
public:
    explicit Heap(HeapConfig config = {});
    ~Heap();

    Heap(const Heap&) = delete;
    Heap& operator=(const Heap&) = delete;

    /// Mint a fresh compartment id. Ids are never reused.
    CompartmentId register_compartment();
    bool compartment_registered(CompartmentId c) const;
    std::size_t compartment_count() const { return compartments_registered_; }

    /// Allocate a payload in `compartment`. With zeal set, a full
    /// collection runs immediately before the new object is installed;
    /// otherwise one runs first once `threshold` allocations have
    /// happened since the last cycle. The new object is born unmarked
    /// and is returned live. Throws OutOfMemory only after a forced
    /// collection failed to vacate a slot.
    template <class T>
    ObjectRef allocate(CompartmentId compartment, T payload, const RootRegistry& roots,
                       std::span<const ObjectRef> globals, bool is_global = false) {
        return install(compartment, std::make_unique<PayloadBox<T>>(std::move(payload)),
                       is_global, roots, globals);
    }

    /// True iff `ref` names the slot's current tenant.
    bool valid(ObjectRef ref) const;

    /// Read the payload. Stale generation or vacant slot is a
    /// use-after-free; in this dynamic-enforcement build that error
    /// firing marks a discipline violation by the caller.
    template <class T>
    const T& read(ObjectRef ref) const {
        return payload_as<T>(ref)->value;
    }

    /// Mutable payload access. Capability gating is the context
    /// layer's job; the heap only checks validity.
    template <class T>
    T& write(ObjectRef ref) {
        return const_cast<PayloadBox<T>*>(payload_as<T>(ref))->value;
    }

    const std::type_info& payload_type(ObjectRef ref) const;
    CompartmentId compartment_of(ObjectRef ref) const;
    bool is_global(ObjectRef ref) const;

    /// Mark everything reachable from roots and globals, then sweep
    /// unmarked objects (whole heap, or one compartment when `scope` is
    /// set). Sweeping runs each finalizer exactly once, bumps the slot
    /// generation, poisons the payload and returns the slot to the
    /// free list. Marks are clear again when this returns.
    ///
    /// Tracing asserts that every edge stays inside its owner's
    /// compartment; a cross-compartment edge is a broken tracer and
    /// raises CompartmentViolation.
    CollectionStats collect(const RootRegistry& roots, std::span<const ObjectRef> globals,
                            std::optional<CompartmentId> scope = std::nullopt);

    /// Run `ref`'s tracer, feeding each edge to `v`.
    void trace_object(ObjectRef ref, TraceVisitor& v) const;

    std::size_t occupied_count() const { return occupied_; }
    std::size_t capacity() const { return config_.capacity; }
    const HeapConfig& config() const { return config_; }
    const HeapTotals& totals() const { return totals_; }
    const CollectionStats& last_collection() const { return last_stats_; }

    /// Occupied slots in slot order.
    std::vector<ObjectRef> live_refs() const;

    /// Snapshot of the occupied slots taken at the end of the most
    /// recent collection, before any later allocation.
    const std::vector<ObjectRef>& last_collection_live() const { return last_live_; }

    /// Plain-text listing `slot,gen,compartment,marked,edges`, one
    /// object per line in slot order, edges as `;`-joined child slots.
    void dump(std::ostream& out) const;

    /// Fault-injection hook for harness self-tests: edges the filter
    /// rejects are dropped during marking. Never set in normal use.
    void set_trace_filter(std::function<bool(ObjectRef owner, ObjectRef child)> filter) {
        trace_filter_ = std::move(filter);
    }

private:
    struct PayloadBase {
        virtual ~PayloadBase() = default;
        virtual void trace(TraceVisitor& v) const = 0;
        virtual const std::type_info& type() const = 0;
    };

    template <class T>
    struct PayloadBox final : PayloadBase {
        explicit PayloadBox(T v) : value(std::move(v)) {}
        void trace(TraceVisitor& v) const override { trace_value(value, v); }
        const std::type_info& type() const override { return typeid(T); }
        T value;
    };

    struct SlotCell {
        ObjectHeader header;
        std::unique_ptr<PayloadBase> payload; // null iff vacant
    };

    ObjectRef install(CompartmentId compartment, std::unique_ptr<PayloadBase> payload,
                      bool is_global, const RootRegistry& roots,
                      std::span<const ObjectRef> globals);
    std::optional<Slot> acquire_slot(const RootRegistry& roots,
                                     std::span<const ObjectRef> globals);
    void check_not_finalizing(const char* op) const;
    const SlotCell& checked_cell(ObjectRef ref) const;

    template <class T>
    const PayloadBox<T>* payload_as(ObjectRef ref) const {
        const SlotCell& cell = checked_cell(ref);
        if (cell.payload->type() != typeid(T))
            raise(Fault::TypeMismatch, "payload is not of the requested type");
        return static_cast<const PayloadBox<T>*>(cell.payload.get());
    }

    HeapConfig config_;
    std::vector<SlotCell> slots_;
    std::vector<Slot> free_list_;
    std::size_t occupied_ = 0;
    std::size_t alloc_since_collect_ = 0;
    std::size_t compartments_registered_ = 0;
    bool in_sweep_ = false;
    HeapTotals totals_;
    CollectionStats last_stats_;
    std::vector<ObjectRef> last_live_;
    std::function<bool(ObjectRef, ObjectRef)> trace_filter_;
};

} // namespace capgc
