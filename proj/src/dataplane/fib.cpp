#include "srv6kit/dataplane/fib.hpp"

#include <algorithm>

#include "srv6kit/core/error.hpp"

namespace srv6kit::dataplane {

struct Fib::Node {
    std::shared_ptr<const Node> child[2];
    std::shared_ptr<const FibEntry> entry;

    bool empty() const { return !entry && !child[0] && !child[1]; }
};

struct Fib::Table {
    std::mutex writer;
    mutable std::mutex publish;
    std::shared_ptr<const Node> root;
    std::size_t count = 0;

    std::shared_ptr<const Node> snapshot() const
    {
        std::lock_guard lk(publish);
        return root;
    }

    void publish_root(std::shared_ptr<const Node> r)
    {
        std::lock_guard lk(publish);
        root = std::move(r);
    }
};

namespace {

using NodePtr = std::shared_ptr<const Fib::Node>;

const Fib::Node* descend(const Fib::Node* n, const Ipv6Prefix& p)
{
    for (int depth = 0; n && depth < p.prefix_len; ++depth)
        n = n->child[p.address.bit(depth)].get();
    return n;
}

// Returns a copy of `n` with `entry` placed at the node addressed by `p`.
// A null `entry` clears it and prunes branches left empty.
NodePtr with_entry(const Fib::Node* n, const Ipv6Prefix& p, int depth, std::shared_ptr<const FibEntry> entry)
{
    auto copy = n ? std::make_shared<Fib::Node>(*n) : std::make_shared<Fib::Node>();
    if (depth == p.prefix_len) {
        copy->entry = std::move(entry);
    } else {
        int b = p.address.bit(depth);
        copy->child[b] = with_entry(copy->child[b].get(), p, depth + 1, std::move(entry));
    }
    if (copy->empty())
        return nullptr;
    return copy;
}

// Copy of the path above `cut`, with the branch taken at `cut` dropped.
NodePtr without_branch(const Fib::Node* n, const Ipv6Prefix& p, int depth, int cut)
{
    auto copy = std::make_shared<Fib::Node>(*n);
    int b = p.address.bit(depth);
    if (depth == cut)
        copy->child[b] = nullptr;
    else
        copy->child[b] = without_branch(n->child[b].get(), p, depth + 1, cut);
    return copy;
}

// Clears the entry at `p` (which must exist), copying only the nodes that survive.
NodePtr without_entry(const Fib::Node* root, const Ipv6Prefix& p)
{
    const Fib::Node* n = root;
    int cut = -1;
    for (int depth = 0; depth < p.prefix_len; ++depth) {
        int b = p.address.bit(depth);
        if (n->entry || n->child[1 - b])
            cut = depth;
        n = n->child[b].get();
    }
    if (n->child[0] || n->child[1])
        return with_entry(root, p, 0, nullptr);
    if (cut < 0)
        return nullptr;
    return without_branch(root, p, 0, cut);
}

void collect(const Fib::Node* n, std::vector<FibEntry>& out)
{
    if (!n)
        return;
    if (n->entry)
        out.push_back(*n->entry);
    collect(n->child[0].get(), out);
    collect(n->child[1].get(), out);
}

void check_prefix(const Ipv6Prefix& p)
{
    if (p.prefix_len < 0 || p.prefix_len > 128)
        throw Error(Errc::InvalidPrefixLen, "prefix length out of range");
}

}  // namespace

Fib::Fib() = default;
Fib::~Fib() = default;

Fib::Table* Fib::table_for(std::uint32_t id, bool create) const
{
    {
        std::shared_lock lk(tables_mu_);
        auto it = tables_.find(id);
        if (it != tables_.end())
            return it->second.get();
        if (!create)
            return nullptr;
    }
    std::unique_lock lk(tables_mu_);
    auto& slot = tables_[id];
    if (!slot)
        slot = std::make_unique<Table>();
    return slot.get();
}

Status Fib::add(const FibEntry& entry, std::uint32_t table)
{
    check_prefix(entry.destination);
    FibEntry e = entry;
    e.destination = canonicalize_prefix(entry.destination);
    Table* t = table_for(table, true);
    std::lock_guard lk(t->writer);
    auto root = t->snapshot();
    const Node* at = descend(root.get(), e.destination);
    if (at && at->entry)
        return Status::AlreadyExists;
    auto next = with_entry(root.get(), e.destination, 0, std::make_shared<const FibEntry>(std::move(e)));
    t->publish_root(std::move(next));
    ++t->count;
    return Status::Ok;
}

Status Fib::remove(const Ipv6Prefix& destination, std::uint32_t table)
{
    return remove_if(destination, table, [](const FibEntry&) { return true; });
}

Status Fib::remove_if(const Ipv6Prefix& destination, std::uint32_t table,
                      const std::function<bool(const FibEntry&)>& pred)
{
    check_prefix(destination);
    Ipv6Prefix p = canonicalize_prefix(destination);
    Table* t = table_for(table, false);
    if (!t)
        return Status::NotFound;
    std::lock_guard lk(t->writer);
    auto root = t->snapshot();
    const Node* at = descend(root.get(), p);
    if (!at || !at->entry || !pred(*at->entry))
        return Status::NotFound;
    auto next = without_entry(root.get(), p);
    t->publish_root(std::move(next));
    --t->count;
    return Status::Ok;
}

Status Fib::update(const FibEntry& entry, std::uint32_t table)
{
    check_prefix(entry.destination);
    FibEntry e = entry;
    e.destination = canonicalize_prefix(entry.destination);
    Table* t = table_for(table, false);
    if (!t)
        return Status::NotFound;
    std::lock_guard lk(t->writer);
    auto root = t->snapshot();
    const Node* at = descend(root.get(), e.destination);
    if (!at || !at->entry)
        return Status::NotFound;
    auto next = with_entry(root.get(), e.destination, 0, std::make_shared<const FibEntry>(std::move(e)));
    t->publish_root(std::move(next));
    return Status::Ok;
}

std::vector<FibEntry> Fib::list(std::uint32_t table) const
{
    std::vector<FibEntry> out;
    if (Table* t = table_for(table, false))
        collect(t->snapshot().get(), out);
    std::sort(out.begin(), out.end(), [](const FibEntry& a, const FibEntry& b) {
        return a.destination < b.destination;
    });
    return out;
}

std::vector<std::uint32_t> Fib::tables() const
{
    std::shared_lock lk(tables_mu_);
    std::vector<std::uint32_t> ids;
    for (auto& [id, t] : tables_)
        ids.push_back(id);
    return ids;
}

std::shared_ptr<const FibEntry> Fib::lookup(const Ipv6Address& addr, std::uint32_t table) const
{
    Table* t = table_for(table, false);
    if (!t)
        return nullptr;
    auto root = t->snapshot();
    const Node* n = root.get();
    const std::shared_ptr<const FibEntry>* best = nullptr;
    for (int depth = 0; n; ++depth) {
        if (n->entry)
            best = &n->entry;
        if (depth == 128)
            break;
        n = n->child[addr.bit(depth)].get();
    }
    return best ? *best : nullptr;
}

std::shared_ptr<const FibEntry> Fib::find(const Ipv6Prefix& destination, std::uint32_t table) const
{
    check_prefix(destination);
    Table* t = table_for(table, false);
    if (!t)
        return nullptr;
    auto root = t->snapshot();
    const Node* at = descend(root.get(), canonicalize_prefix(destination));
    return at ? at->entry : nullptr;
}

std::size_t Fib::size(std::uint32_t table) const
{
    Table* t = table_for(table, false);
    if (!t)
        return 0;
    std::lock_guard lk(t->writer);
    return t->count;
}

void Fib::clear()
{
    std::unique_lock lk(tables_mu_);
    for (auto& [id, t] : tables_) {
        std::lock_guard wl(t->writer);
        t->publish_root(nullptr);
        t->count = 0;
    }
}

std::optional<FibEntry> linear_lookup(const std::vector<FibEntry>& entries, const Ipv6Address& addr)
{
    const FibEntry* best = nullptr;
    for (const auto& e : entries)
        if (e.destination.contains(addr) && (!best || e.destination.prefix_len > best->destination.prefix_len))
            best = &e;
    if (!best)
        return std::nullopt;
    return *best;
}

}  // namespace srv6kit::dataplane
