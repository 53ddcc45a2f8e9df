#pragma once

#include <optional>
#include <string>
#include <vector>

#include "capgc/brands.hpp"
#include "capgc/context.hpp"

namespace capgc::dll {

/// Native payload of one list cell: text plus managed links to the
/// neighbors. For live, reachable cells the list is consistent:
/// a.next = b implies b.prev = a, and symmetrically.
struct NativeCell {
    std::string data;
    std::optional<Managed<NativeCell>> prev;
    std::optional<Managed<NativeCell>> next;

    void trace(TraceVisitor& v) const {
        trace_value(prev, v);
        trace_value(next, v);
    }

    void rebrand(const BrandTransform& tr) {
        rebrand_value(prev, tr);
        rebrand_value(next, tr);
    }
};

using Cell = Managed<NativeCell>;

/// Allocate a single-cell list and pin it in the caller's root.
Cell new_list(Context& cx, std::string data, Root& root);

/// Splice a new cell after `cell`. The locals the operation holds
/// across its allocation are rooted, so this is safe under zeal; the
/// caller is responsible for keeping `cell` itself alive.
void insert(Cell cell, std::string data, Context& cx);

/// Swap in new text, returning the old. Links are untouched.
std::string replace(Cell cell, std::string new_data, Context& cx);

/// Splice `cell` out of its list and clear its own links. The detached
/// cell becomes garbage unless something else keeps it alive.
void remove(Cell cell, Context& cx);

/// Collect the data fields from `head` to the end of the list.
std::vector<std::string> traverse(Cell head, Context& cx);

} // namespace capgc::dll
