#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "capgc/brands.hpp"
#include "capgc/heap.hpp"
#include "capgc/roots.hpp"
#include "capgc/types.hpp"

namespace capgc {

class Context;
struct ContextTestAccess;

namespace detail {

struct CurrentComp {
    enum Kind { None, Known, Wildcard } kind = None;
    CompartmentId id = 0;
};

struct Frame {
    bool can_access = true;
    bool can_alloc = true;
    CurrentComp comp;
    std::optional<CompartmentId> initializing;
    std::optional<ObjectRef> entered;
};

struct CompartmentRecord {
    std::optional<ObjectRef> global;
    bool live = true;
};

/// Shared state behind a stack of Context handles. The dynamic twin of
/// the grant discipline lives here: view counters serialize access
/// against collection, and the frame stack realizes parent suspension
/// while a nested context is active.
struct ContextCore {
    explicit ContextCore(HeapConfig cfg) : heap(cfg) { frames.push_back(Frame{}); }

    Heap heap;
    RootRegistry roots;
    std::vector<CompartmentRecord> compartments;
    std::vector<Frame> frames;
    int active_reads = 0;
    int active_writes = 0;

    Frame& top() { return frames.back(); }

    std::vector<ObjectRef> globals_vec() const {
        std::vector<ObjectRef> out;
        for (const CompartmentRecord& rec : compartments)
            if (rec.global) out.push_back(*rec.global);
        return out;
    }

    // Check helpers; each throws a Violation on failure.
    void require_current(std::size_t depth) const;
    void require_no_views() const;
    void require_no_writes() const;
    void require_can_access() const;
    void require_can_alloc() const;
    CompartmentId require_known_compartment() const;

    void pre_manage(std::size_t depth) const;
    void pre_access(std::size_t depth) const;
    void pre_access_exclusive(std::size_t depth) const;
    void pre_collect(std::size_t depth) const;
    void pre_enter(std::size_t depth) const;
    CompartmentId pre_global_manage(std::size_t depth) const;
};

} // namespace detail

/// Scoped shared (read) view of one payload. While any view is alive
/// no collection can begin and no exclusive view can be taken.
template <class T>
class ReadView {
public:
    ReadView(ReadView&& other) noexcept
        : core_(std::exchange(other.core_, nullptr)), ptr_(other.ptr_) {}
    ReadView(const ReadView&) = delete;
    ReadView& operator=(const ReadView&) = delete;
    ReadView& operator=(ReadView&&) = delete;

    ~ReadView() {
        if (core_) --core_->active_reads;
    }

    const T& operator*() const { return *ptr_; }
    const T* operator->() const { return ptr_; }

private:
    friend class Context;
    ReadView(detail::ContextCore* core, const T* ptr) : core_(core), ptr_(ptr) {
        ++core_->active_reads;
    }

    detail::ContextCore* core_;
    const T* ptr_;
};

/// Scoped exclusive (write) view. At most one exists at any instant,
/// and no read view coexists with it.
template <class T>
class WriteView {
public:
    WriteView(WriteView&& other) noexcept
        : core_(std::exchange(other.core_, nullptr)), ptr_(other.ptr_) {}
    WriteView(const WriteView&) = delete;
    WriteView& operator=(const WriteView&) = delete;
    WriteView& operator=(WriteView&&) = delete;

    ~WriteView() {
        if (core_) --core_->active_writes;
    }

    T& operator*() const { return *ptr_; }
    T* operator->() const { return ptr_; }

private:
    friend class Context;
    WriteView(detail::ContextCore* core, T* ptr) : core_(core), ptr_(ptr) {
        ++core_->active_writes;
    }

    detail::ContextCore* core_;
    T* ptr_;
};

/// The unique capability gating every heap operation. One Context
/// exists per heap; entering or creating a compartment yields a nested
/// Context and suspends the parent until the child's scope ends.
/// Confined to the thread that created it.
class Context {
public:
    explicit Context(HeapConfig cfg = {})
        : owned_(std::make_unique<detail::ContextCore>(cfg)), core_(owned_.get()), depth_(0) {}

    Context(Context&& other) noexcept
        : owned_(std::move(other.owned_)), core_(std::exchange(other.core_, nullptr)),
          depth_(other.depth_) {}
    Context(const Context&) = delete;
    Context& operator=(const Context&) = delete;
    Context& operator=(Context&&) = delete;

    ~Context() {
        if (core_ && !owned_) {
            // Nested context ends: restore the parent.
            while (core_->frames.size() > depth_) core_->frames.pop_back();
        }
    }

    /// Allocate a payload in the current compartment. Requires the
    /// exclusive grant (no outstanding views): allocation may trigger
    /// a collection.
    template <class T>
    Managed<T> manage(T payload) {
        core_->pre_manage(depth_);
        CompartmentId c = core_->require_known_compartment();
        ObjectRef ref = core_->heap.allocate<T>(c, std::move(payload), core_->roots,
                                                core_->globals_vec());
        return Managed<T>(ref, CompartmentTag::known(c));
    }

    /// Shared view of the payload. The ref's compartment must be
    /// named, but need not be the current one: reading never crosses
    /// the collector. No collection can run while the view is alive.
    template <class T>
    ReadView<T> access(Managed<T> ref) {
        core_->pre_access(depth_);
        check_ref(ref);
        const T& value = core_->heap.read<T>(ref.target());
        return ReadView<T>(core_, &value);
    }

    /// Exclusive view of the payload; excludes every other view for
    /// its duration.
    template <class T>
    WriteView<T> access_exclusive(Managed<T> ref) {
        core_->pre_access_exclusive(depth_);
        check_ref(ref);
        T& value = core_->heap.write<T>(ref.target());
        return WriteView<T>(core_, &value);
    }

    /// Whole-heap collection from the root registry plus every
    /// compartment's global.
    CollectionStats trigger_collection() {
        core_->pre_collect(depth_);
        return core_->heap.collect(core_->roots, core_->globals_vec());
    }

    /// Collection sweeping only one compartment.
    CollectionStats collect_compartment(CompartmentId c) {
        core_->pre_collect(depth_);
        return core_->heap.collect(core_->roots, core_->globals_vec(), c);
    }

    /// Create a fresh compartment and enter it for initialization. The
    /// nested context can allocate but not access until global_manage
    /// attaches data to the new compartment's global.
    Context create_compartment() {
        core_->pre_enter(depth_);
        CompartmentId c = core_->heap.register_compartment();
        core_->compartments.push_back(detail::CompartmentRecord{});
        detail::Frame frame;
        frame.can_access = false;
        frame.can_alloc = true;
        frame.comp = {detail::CurrentComp::Known, c};
        frame.initializing = c;
        core_->frames.push_back(frame);
        return Context(core_, depth_ + 1);
    }

    /// Attach the payload to the initializing compartment's global and
    /// complete initialization: the context regains access permission.
    template <class T>
    Managed<T> global_manage(T payload) {
        CompartmentId c = core_->pre_global_manage(depth_);
        ObjectRef ref = core_->heap.allocate<T>(c, std::move(payload), core_->roots,
                                                core_->globals_vec(), /*is_global=*/true);
        core_->compartments[c].global = ref;
        detail::Frame& f = core_->top();
        f.initializing.reset();
        f.can_access = true;
        return Managed<T>(ref, CompartmentTag::known(c));
    }

    /// The current compartment's global. Stable across calls; the
    /// global is pinned for the compartment's whole life.
    template <class T>
    Managed<T> global() const {
        core_->require_current(depth_);
        CompartmentId c = core_->require_known_compartment();
        const detail::CompartmentRecord& rec = core_->compartments[c];
        if (!rec.global)
            raise(Fault::NotInitialized,
                  "compartment " + std::to_string(c) + " has no global yet");
        if (core_->heap.payload_type(*rec.global) != typeid(T))
            raise(Fault::TypeMismatch, "global payload is not of the requested type");
        return Managed<T>(*rec.global, CompartmentTag::known(c));
    }

    /// Enter the named compartment of `ref`: allocations in the nested
    /// context land there.
    template <class T>
    Context enter_known_compartment(Managed<T> ref) {
        core_->pre_enter(depth_);
        if (ref.compartment().is_wildcard())
            raise(Fault::WildcardAccess,
                  "enter_known_compartment requires a named compartment brand");
        if (!core_->heap.valid(ref.target()))
            raise(Fault::UseAfterFree, "entering compartment of a reclaimed object");
        CompartmentId c = core_->heap.compartment_of(ref.target());
        if (c != ref.compartment().id())
            raise(Fault::CompartmentViolation, "compartment brand disagrees with object header");
        return push_entered_frame(c, std::nullopt);
    }

    /// Enter the compartment of a wildcard-branded ref under a fresh
    /// name; entered() then yields the ref usable under that name.
    template <class T>
    Context enter_unknown_compartment(Managed<T> ref) {
        core_->pre_enter(depth_);
        if (ref.compartment().is_known())
            raise(Fault::TypeMismatch,
                  "enter_unknown_compartment expects a wildcard-branded ref");
        if (!core_->heap.valid(ref.target()))
            raise(Fault::UseAfterFree, "entering compartment of a reclaimed object");
        CompartmentId c = core_->heap.compartment_of(ref.target());
        return push_entered_frame(c, ref.target());
    }

    /// The ref this context was entered with, rebranded to the entered
    /// compartment's name.
    template <class T>
    Managed<T> entered() const {
        core_->require_current(depth_);
        const detail::Frame& f = core_->frames[depth_];
        if (!f.entered)
            raise(Fault::NotEntered, "context was not produced by enter_unknown_compartment");
        if (core_->heap.payload_type(*f.entered) != typeid(T))
            raise(Fault::TypeMismatch, "entered payload is not of the requested type");
        return Managed<T>(*f.entered, CompartmentTag::known(f.comp.id));
    }

    Root new_root() {
        core_->require_current(depth_);
        return Root(core_->roots);
    }

    // State inspection (used by tests and the stress harness).
    bool can_access() const { return frame().can_access; }
    bool can_alloc() const { return frame().can_alloc; }
    bool is_initializing() const { return frame().initializing.has_value(); }
    std::optional<CompartmentId> current_compartment() const {
        const detail::Frame& f = frame();
        if (f.comp.kind == detail::CurrentComp::Known) return f.comp.id;
        return std::nullopt;
    }
    std::size_t depth() const { return depth_; }
    std::size_t compartment_count() const { return core_->compartments.size(); }

    const Heap& heap() const { return core_->heap; }
    /// Discipline-bypassing heap access, for tests and the harness.
    Heap& raw_heap() { return core_->heap; }
    const RootRegistry& roots() const { return core_->roots; }
    const HeapTotals& totals() const { return core_->heap.totals(); }
    std::vector<ObjectRef> compartment_globals() const { return core_->globals_vec(); }

private:
    friend struct ContextTestAccess;

    Context(detail::ContextCore* core, std::size_t depth) : core_(core), depth_(depth) {}

    const detail::Frame& frame() const { return core_->frames[depth_]; }

    Context push_entered_frame(CompartmentId c, std::optional<ObjectRef> entered) {
        detail::Frame frame;
        frame.can_access = true;
        frame.can_alloc = true;
        frame.comp = {detail::CurrentComp::Known, c};
        frame.entered = entered;
        core_->frames.push_back(frame);
        return Context(core_, depth_ + 1);
    }

    template <class T>
    void check_ref(const Managed<T>& ref) const {
        if (ref.compartment().is_wildcard())
            raise(Fault::WildcardAccess,
                  "wildcard-branded ref must be entered before access");
        if (!core_->heap.valid(ref.target())) {
            const char* why = "object was reclaimed; the handle outlived its rooting";
            raise(Fault::UseAfterFree, why);
        }
        if (core_->heap.compartment_of(ref.target()) != ref.compartment().id())
            raise(Fault::CompartmentViolation,
                  "compartment brand disagrees with object header");
    }

    std::unique_ptr<detail::ContextCore> owned_;
    detail::ContextCore* core_ = nullptr;
    std::size_t depth_ = 0;
};

/// Backdoor for tests that need states unreachable through the public
/// surface (e.g. a wildcard current compartment).
struct ContextTestAccess {
    static void force_wildcard_frame(Context& cx) {
        cx.core_->frames[cx.depth_].comp = {detail::CurrentComp::Wildcard, 0};
    }
};

} // namespace capgc
