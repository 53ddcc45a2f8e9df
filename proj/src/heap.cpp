#include "capgc/heap.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <string>

namespace capgc {

const char* to_string(Fault f) {
    switch (f) {
    case Fault::UseAfterFree: return "use-after-free";
    case Fault::OutOfMemory: return "out-of-memory";
    case Fault::CompartmentViolation: return "compartment-violation";
    case Fault::NoCompartment: return "no-compartment";
    case Fault::WildcardAccess: return "wildcard-access";
    case Fault::AccessForbidden: return "access-forbidden";
    case Fault::AlreadyActive: return "already-active";
    case Fault::AlreadyInitialized: return "already-initialized";
    case Fault::NotInitialized: return "not-initialized";
    case Fault::NotEntered: return "not-entered";
    case Fault::RootOccupied: return "root-occupied";
    case Fault::FinalizerReentrancy: return "finalizer-reentrancy";
    case Fault::CycleDetected: return "cycle-detected";
    case Fault::ConfigMismatch: return "config-mismatch";
    case Fault::TypeMismatch: return "type-mismatch";
    }
    return "unknown-fault";
}

Heap::Heap(HeapConfig config) : config_(config) {
    slots_.reserve(std::min<std::size_t>(config_.capacity, 1024));
}

Heap::~Heap() {
    // Teardown finalizes whatever is still live, exactly once each.
    in_sweep_ = true;
    for (SlotCell& cell : slots_) cell.payload.reset();
}

CompartmentId Heap::register_compartment() {
    return static_cast<CompartmentId>(compartments_registered_++);
}

bool Heap::compartment_registered(CompartmentId c) const {
    return c < compartments_registered_;
}

bool Heap::valid(ObjectRef ref) const {
    if (ref.slot >= slots_.size()) return false;
    const SlotCell& cell = slots_[ref.slot];
    return cell.payload != nullptr && cell.header.generation == ref.generation;
}

const Heap::SlotCell& Heap::checked_cell(ObjectRef ref) const {
    check_not_finalizing("read");
    if (ref.slot >= slots_.size() || slots_[ref.slot].payload == nullptr)
        raise(Fault::UseAfterFree,
              "slot " + std::to_string(ref.slot) + " is vacant (object reclaimed)");
    const SlotCell& cell = slots_[ref.slot];
    if (cell.header.generation != ref.generation)
        raise(Fault::UseAfterFree,
              "slot " + std::to_string(ref.slot) + " generation " +
                  std::to_string(ref.generation) + " superseded by " +
                  std::to_string(cell.header.generation));
    return cell;
}

const std::type_info& Heap::payload_type(ObjectRef ref) const {
    return checked_cell(ref).payload->type();
}

CompartmentId Heap::compartment_of(ObjectRef ref) const {
    return checked_cell(ref).header.compartment;
}

bool Heap::is_global(ObjectRef ref) const {
    return checked_cell(ref).header.is_global;
}

void Heap::check_not_finalizing(const char* op) const {
    if (in_sweep_)
        raise(Fault::FinalizerReentrancy,
              std::string("finalizer attempted heap ") + op);
}

std::optional<Slot> Heap::acquire_slot(const RootRegistry& roots,
                                       std::span<const ObjectRef> globals) {
    if (!free_list_.empty()) {
        Slot s = free_list_.back();
        free_list_.pop_back();
        return s;
    }
    if (slots_.size() < config_.capacity) {
        slots_.emplace_back();
        return static_cast<Slot>(slots_.size() - 1);
    }
    // Arena full: force a collection and retry once.
    collect(roots, globals);
    if (!free_list_.empty()) {
        Slot s = free_list_.back();
        free_list_.pop_back();
        return s;
    }
    return std::nullopt;
}

ObjectRef Heap::install(CompartmentId compartment, std::unique_ptr<PayloadBase> payload,
                        bool is_global, const RootRegistry& roots,
                        std::span<const ObjectRef> globals) {
    check_not_finalizing("allocation");
    if (!compartment_registered(compartment))
        raise(Fault::NoCompartment,
              "compartment " + std::to_string(compartment) + " is not registered");

    if (config_.zeal)
        collect(roots, globals);
    else if (alloc_since_collect_ >= config_.threshold)
        collect(roots, globals);

    std::optional<Slot> slot = acquire_slot(roots, globals);
    if (!slot)
        raise(Fault::OutOfMemory, "arena exhausted after a forced collection (capacity " +
                                      std::to_string(config_.capacity) + ")");

    SlotCell& cell = slots_[*slot];
    cell.header.compartment = compartment;
    cell.header.generation += 1;
    cell.header.marked = false;
    cell.header.is_global = is_global;
    cell.payload = std::move(payload);
    ++occupied_;
    ++alloc_since_collect_;
    ++totals_.allocations;
    return ObjectRef{*slot, cell.header.generation};
}

void Heap::trace_object(ObjectRef ref, TraceVisitor& v) const {
    checked_cell(ref).payload->trace(v);
}

CollectionStats Heap::collect(const RootRegistry& roots, std::span<const ObjectRef> globals,
                              std::optional<CompartmentId> scope) {
    check_not_finalizing("collection");
    if (scope && !compartment_registered(*scope))
        raise(Fault::NoCompartment,
              "collection scope names unregistered compartment " + std::to_string(*scope));

    // Mark. The worklist keeps deep structures from exhausting the call
    // stack; marking always covers the whole heap, even when the sweep
    // is scoped to one compartment.
    std::vector<ObjectRef> worklist = roots.refs();
    worklist.insert(worklist.end(), globals.begin(), globals.end());

    ObjectRef owner{};
    bool have_owner = false;
    TraceVisitor visitor([&](ObjectRef child) {
        if (trace_filter_ && have_owner && !trace_filter_(owner, child)) return;
        if (!valid(child))
            raise(Fault::UseAfterFree, "traced edge to reclaimed object (slot " +
                                           std::to_string(child.slot) + ")");
        if (have_owner) {
            CompartmentId oc = slots_[owner.slot].header.compartment;
            CompartmentId cc = slots_[child.slot].header.compartment;
            if (oc != cc)
                raise(Fault::CompartmentViolation,
                      "edge from compartment " + std::to_string(oc) + " (slot " +
                          std::to_string(owner.slot) + ") to compartment " +
                          std::to_string(cc) + " (slot " + std::to_string(child.slot) + ")");
        }
        worklist.push_back(child);
    });

    while (!worklist.empty()) {
        ObjectRef ref = worklist.back();
        worklist.pop_back();
        if (!valid(ref))
            raise(Fault::UseAfterFree,
                  "mark root names reclaimed object (slot " + std::to_string(ref.slot) + ")");
        SlotCell& cell = slots_[ref.slot];
        if (cell.header.marked) continue;
        cell.header.marked = true;
        owner = ref;
        have_owner = true;
        cell.payload->trace(visitor);
    }

    // Sweep the scoped slots; clear marks everywhere.
    CollectionStats stats;
    std::set<CompartmentId> seen_compartments;
    for (Slot s = 0; s < slots_.size(); ++s) {
        SlotCell& cell = slots_[s];
        if (!cell.payload) continue;
        bool in_scope = !scope || cell.header.compartment == *scope;
        if (!in_scope) {
            cell.header.marked = false;
            continue;
        }
        seen_compartments.insert(cell.header.compartment);
        if (cell.header.marked) {
            cell.header.marked = false;
            ++stats.live;
            continue;
        }
        // Unreachable: finalize exactly once, poison, recycle the slot.
        in_sweep_ = true;
        cell.payload.reset();
        in_sweep_ = false;
        cell.header.generation += 1;
        cell.header.is_global = false;
        free_list_.push_back(s);
        --occupied_;
        ++stats.freed;
        ++stats.finalizers_run;
    }
    stats.compartments_swept = scope ? 1 : seen_compartments.size();

    alloc_since_collect_ = 0;
    ++totals_.collections;
    totals_.freed += stats.freed;
    totals_.finalizers += stats.finalizers_run;
    last_stats_ = stats;
    last_live_ = live_refs();
    return stats;
}

std::vector<ObjectRef> Heap::live_refs() const {
    std::vector<ObjectRef> out;
    out.reserve(occupied_);
    for (Slot s = 0; s < slots_.size(); ++s)
        if (slots_[s].payload)
            out.push_back(ObjectRef{s, slots_[s].header.generation});
    return out;
}

void Heap::dump(std::ostream& out) const {
    for (Slot s = 0; s < slots_.size(); ++s) {
        const SlotCell& cell = slots_[s];
        if (!cell.payload) continue;
        out << s << ',' << cell.header.generation << ',' << cell.header.compartment << ','
            << (cell.header.marked ? 1 : 0) << ',';
        bool first = true;
        TraceVisitor v([&](ObjectRef child) {
            if (!first) out << ';';
            out << child.slot;
            first = false;
        });
        cell.payload->trace(v);
        out << '\n';
    }
}

} // namespace capgc
