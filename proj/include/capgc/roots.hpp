#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "capgc/types.hpp"

namespace capgc {

class Root;

/// The root set: an intrusive doubly-linked registry of occupied root
/// cells. The collector treats the content of every registered cell as
/// live. Removal is O(1) in any order, not just LIFO.
class RootRegistry {
public:
    RootRegistry() = default;
    RootRegistry(const RootRegistry&) = delete;
    RootRegistry& operator=(const RootRegistry&) = delete;

    std::size_t count() const { return count_; }

    std::vector<ObjectRef> refs() const;

private:
    friend class Root;

    Root* head_ = nullptr;
    std::size_t count_ = 0;
};

/// A stack cell pinning at most one managed reference. Registered with
/// its registry exactly while it holds content; deregistration happens
/// when the cell is cleared or its scope ends. Rooting copies only the
/// reference, never the payload.
class Root {
public:
    explicit Root(RootRegistry& registry) : registry_(&registry) {}

    Root(const Root&) = delete;
    Root& operator=(const Root&) = delete;

    ~Root() { clear(); }

    bool occupied() const { return ref_.has_value(); }

    ObjectRef ref() const {
        if (!ref_) throw std::logic_error("Root::ref on empty root");
        return *ref_;
    }

    /// Pin `target`. Filling an occupied cell is an error: a cell holds
    /// one reference at a time.
    void set(ObjectRef target) {
        if (ref_) raise(Fault::RootOccupied, "root cell already pins an object");
        ref_ = target;
        link();
    }

    void clear() {
        if (!ref_) return;
        unlink();
        ref_.reset();
    }

private:
    friend class RootRegistry;

    void link() {
        next_ = registry_->head_;
        prev_ = nullptr;
        if (next_) next_->prev_ = this;
        registry_->head_ = this;
        ++registry_->count_;
    }

    void unlink() {
        if (prev_)
            prev_->next_ = next_;
        else
            registry_->head_ = next_;
        if (next_) next_->prev_ = prev_;
        prev_ = next_ = nullptr;
        --registry_->count_;
    }

    RootRegistry* registry_;
    Root* prev_ = nullptr;
    Root* next_ = nullptr;
    std::optional<ObjectRef> ref_;
};

inline std::vector<ObjectRef> RootRegistry::refs() const {
    std::vector<ObjectRef> out;
    out.reserve(count_);
    for (const Root* r = head_; r != nullptr; r = r->next_) out.push_back(r->ref());
    return out;
}

} // namespace capgc
