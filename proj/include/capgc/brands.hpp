#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "capgc/roots.hpp"
#include "capgc/tracing.hpp"
#include "capgc/types.hpp"

namespace capgc {

/// Copyable handle to a heap payload of type T, branded with the
/// compartment the payload lives in. Any number of copies may coexist;
/// none grants access to the payload without the Context capability.
///
/// This build enforces the discipline dynamically: duration brands are
/// erased and staleness is caught by generation checks, while the
/// compartment brand is carried at runtime and asserted against the
/// object header on every access.
template <class T>
class Managed {
public:
    Managed(ObjectRef target, CompartmentTag compartment)
        : target_(target), compartment_(compartment) {}

    ObjectRef target() const { return target_; }
    CompartmentTag compartment() const { return compartment_; }

    /// Rooting transform: pin the target in `root` and return a handle
    /// usable for the root's whole duration. The root must be empty.
    /// Rooting never touches the payload, so wildcard-branded handles
    /// may be rooted before their compartment is entered.
    Managed<T> in_root(Root& root) const {
        root.set(target_);
        return *this;
    }

    /// Erase the compartment brand. The target is unchanged; accessing
    /// the result requires entering its compartment first. Idempotent.
    Managed<T> forget_compartment() const {
        return Managed<T>(target_, CompartmentTag::somewhere());
    }

    friend bool operator==(const Managed&, const Managed&) = default;

private:
    template <class>
    friend struct BrandTraits;

    ObjectRef target_;
    CompartmentTag compartment_;
};

enum class BrandKind {
    ContractDuration,
    ExtendDuration,
    SubstCompartment,
    EraseCompartment,
};

/// A brand substitution, applied structurally to every managed handle
/// nested in a value. Duration transforms are identities at runtime in
/// this build (durations are erased); compartment transforms re-tag
/// matching compartment brands.
class BrandTransform {
public:
    static BrandTransform contract_duration() {
        return BrandTransform(BrandKind::ContractDuration, CompartmentTag::somewhere(),
                              CompartmentTag::somewhere());
    }
    static BrandTransform extend_duration() {
        return BrandTransform(BrandKind::ExtendDuration, CompartmentTag::somewhere(),
                              CompartmentTag::somewhere());
    }
    static BrandTransform subst_compartment(CompartmentTag from, CompartmentTag to) {
        return BrandTransform(BrandKind::SubstCompartment, from, to);
    }
    static BrandTransform erase_compartment(CompartmentId c) {
        return BrandTransform(BrandKind::EraseCompartment, CompartmentTag::known(c),
                              CompartmentTag::somewhere());
    }

    BrandKind kind() const { return kind_; }

    CompartmentTag apply(CompartmentTag tag) const {
        switch (kind_) {
        case BrandKind::ContractDuration:
        case BrandKind::ExtendDuration:
            return tag; // durations are erased at runtime
        case BrandKind::SubstCompartment:
        case BrandKind::EraseCompartment:
            return tag == from_ ? to_ : tag;
        }
        return tag;
    }

private:
    BrandTransform(BrandKind kind, CompartmentTag from, CompartmentTag to)
        : kind_(kind), from_(from), to_(to) {}

    BrandKind kind_;
    CompartmentTag from_;
    CompartmentTag to_;
};

/// Rebranding protocol, the mirror of TraceTraits: a transform
/// distributes through products, optionals and sequences to every
/// nested Managed handle. User payloads provide a member
/// `void rebrand(const BrandTransform&)` that forwards to their fields.
template <class T>
struct BrandTraits;

template <class T>
concept MemberRebrandable = requires(T& t, const BrandTransform& tr) {
    { t.rebrand(tr) };
};

template <MemberRebrandable T>
struct BrandTraits<T> {
    static void apply(T& value, const BrandTransform& tr) { value.rebrand(tr); }
};

template <class T>
    requires std::is_arithmetic_v<T>
struct BrandTraits<T> {
    static void apply(T&, const BrandTransform&) {}
};

template <>
struct BrandTraits<std::string> {
    static void apply(std::string&, const BrandTransform&) {}
};

template <>
struct BrandTraits<std::monostate> {
    static void apply(std::monostate&, const BrandTransform&) {}
};

template <class T>
struct BrandTraits<Managed<T>> {
    static void apply(Managed<T>& handle, const BrandTransform& tr) {
        handle.compartment_ = tr.apply(handle.compartment_);
    }
};

template <class T>
void rebrand_value(T& value, const BrandTransform& tr) {
    BrandTraits<T>::apply(value, tr);
}

template <class T>
T rebranded(T value, const BrandTransform& tr) {
    rebrand_value(value, tr);
    return value;
}

template <class U>
struct BrandTraits<std::optional<U>> {
    static void apply(std::optional<U>& value, const BrandTransform& tr) {
        if (value) rebrand_value(*value, tr);
    }
};

template <class U, class A>
struct BrandTraits<std::vector<U, A>> {
    static void apply(std::vector<U, A>& value, const BrandTransform& tr) {
        for (U& item : value) rebrand_value(item, tr);
    }
};

template <class A, class B>
struct BrandTraits<std::pair<A, B>> {
    static void apply(std::pair<A, B>& value, const BrandTransform& tr) {
        rebrand_value(value.first, tr);
        rebrand_value(value.second, tr);
    }
};

template <class... Us>
struct BrandTraits<std::tuple<Us...>> {
    static void apply(std::tuple<Us...>& value, const BrandTransform& tr) {
        std::apply([&](Us&... parts) { (rebrand_value(parts, tr), ...); }, value);
    }
};

// A managed handle is itself traceable: it contributes one edge.
template <class T>
struct TraceTraits<Managed<T>> {
    static void trace(const Managed<T>& handle, TraceVisitor& v) { v.edge(handle.target()); }
};

} // namespace capgc
