#pragma once

#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "capgc/types.hpp"

namespace capgc {

/// Edge sink handed to payload tracers. A payload's trace hook must
/// report exactly the managed references it currently holds: a missed
/// edge is a use-after-free waiting to happen, an invented edge is a
/// leak. The visitor never retains edges beyond the trace call.
class TraceVisitor {
public:
    using Sink = std::function<void(ObjectRef)>;

    explicit TraceVisitor(Sink sink) : sink_(std::move(sink)) {}

    void edge(ObjectRef child) { sink_(child); }

private:
    Sink sink_;
};

/// Tracing protocol. A payload type participates either by providing a
/// member `void trace(TraceVisitor&) const`, or through one of the
/// composition rules below (optionals, sequences, products), or by
/// being a leaf with no managed references.
template <class T>
struct TraceTraits; // unspecialized: type does not satisfy the protocol

template <class T>
concept MemberTraceable = requires(const T& t, TraceVisitor& v) {
    { t.trace(v) };
};

template <MemberTraceable T>
struct TraceTraits<T> {
    static void trace(const T& value, TraceVisitor& v) { value.trace(v); }
};

template <class T>
    requires std::is_arithmetic_v<T>
struct TraceTraits<T> {
    static void trace(const T&, TraceVisitor&) {}
};

template <>
struct TraceTraits<std::string> {
    static void trace(const std::string&, TraceVisitor&) {}
};

template <>
struct TraceTraits<std::monostate> {
    static void trace(const std::monostate&, TraceVisitor&) {}
};

template <class T>
void trace_value(const T& value, TraceVisitor& v) {
    TraceTraits<T>::trace(value, v);
}

// Composition rules: visits of a composite are the union of the
// component visits, order unspecified.

template <class U>
struct TraceTraits<std::optional<U>> {
    static void trace(const std::optional<U>& value, TraceVisitor& v) {
        if (value) trace_value(*value, v);
    }
};

template <class U, class A>
struct TraceTraits<std::vector<U, A>> {
    static void trace(const std::vector<U, A>& value, TraceVisitor& v) {
        for (const U& item : value) trace_value(item, v);
    }
};

template <class A, class B>
struct TraceTraits<std::pair<A, B>> {
    static void trace(const std::pair<A, B>& value, TraceVisitor& v) {
        trace_value(value.first, v);
        trace_value(value.second, v);
    }
};

template <class... Us>
struct TraceTraits<std::tuple<Us...>> {
    static void trace(const std::tuple<Us...>& value, TraceVisitor& v) {
        std::apply([&](const Us&... parts) { (trace_value(parts, v), ...); }, value);
    }
};

} // namespace capgc
