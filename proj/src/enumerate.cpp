#include <formweave/enumerate.hpp>

#include <algorithm>
#include <bit>

namespace formweave {

namespace {

struct Partial {
    std::vector<std::pair<std::string, bool>> states;   // path -> selected?
    std::vector<std::pair<std::string, int>> clones;
};

using Partials = std::vector<Partial>;

class Enumerator {
public:
    explicit Enumerator(const EnumerateOptions& opts) : opts_(opts) {}

    Partials selected(const Node& n, const std::string& path)
    {
        Partials acc{Partial{{{path, true}}, {}}};
        for (const auto& c : n.children)
            acc = product(acc, child_variants(c, join_path(path, c.name)));
        return acc;
    }

private:
    Partials child_variants(const Node& c, const std::string& path)
    {
        Partials out;
        if (c.kind == NodeKind::Group) {
            int size = static_cast<int>(c.children.size());
            for (unsigned mask = 0; mask < (1u << size); ++mask) {
                int chosen = std::popcount(mask);
                if (chosen < c.group.min || chosen > c.group.max)
                    continue;
                Partials acc{Partial{{{path, true}}, {}}};
                for (int i = 0; i < size; ++i) {
                    const auto& m = c.children[static_cast<std::size_t>(i)];
                    auto mpath = join_path(path, m.name);
                    acc = product(acc, (mask >> i) & 1u ? selected(m, mpath) : Partials{eliminated(m, mpath)});
                }
                append(out, std::move(acc));
            }
            return out;
        }
        if (c.is_multi()) {
            int cap = c.cardinality.is_unbounded() ? opts_.clone_bound : std::min(c.cardinality.max, opts_.clone_bound);
            cap = std::max(cap, c.cardinality.min);
            for (int k = c.cardinality.min; k <= cap; ++k) {
                if (k == 0) {
                    out.push_back(Partial{{{path, false}}, {}});
                    continue;
                }
                Partials acc{Partial{{{path, true}}, {{path, k}}}};
                for (int i = 1; i <= k; ++i)
                    acc = product(acc, selected(c, path + "[" + std::to_string(i) + "]"));
                append(out, std::move(acc));
            }
            return out;
        }
        append(out, selected(c, path));
        if (c.cardinality.min == 0)
            out.push_back(eliminated(c, path));
        return out;
    }

    Partial eliminated(const Node& n, const std::string& path)
    {
        Partial p;
        std::function<void(const Node&, const std::string&)> walk = [&](const Node& x, const std::string& xp) {
            p.states.emplace_back(xp, false);
            if (x.is_multi())
                return;
            for (const auto& c : x.children)
                walk(c, join_path(xp, c.name));
        };
        walk(n, path);
        return p;
    }

    Partials product(const Partials& a, const Partials& b)
    {
        if (a.size() * b.size() > opts_.ceiling)
            throw EnumerationLimit("configuration count exceeds the ceiling of " + std::to_string(opts_.ceiling));
        Partials out;
        out.reserve(a.size() * b.size());
        for (const auto& x : a)
            for (const auto& y : b) {
                Partial z = x;
                z.states.insert(z.states.end(), y.states.begin(), y.states.end());
                z.clones.insert(z.clones.end(), y.clones.begin(), y.clones.end());
                out.push_back(std::move(z));
            }
        return out;
    }

    void append(Partials& out, Partials&& more)
    {
        if (out.size() + more.size() > opts_.ceiling)
            throw EnumerationLimit("configuration count exceeds the ceiling of " + std::to_string(opts_.ceiling));
        for (auto& p : more)
            out.push_back(std::move(p));
    }

    const EnumerateOptions& opts_;
};

bool is_selected(const Partial& p, const std::string& path)
{
    for (const auto& [k, v] : p.states)
        if (k == path)
            return v;
    return false;
}

bool satisfies(const Partial& p, const std::vector<CrossTreeConstraint>& constraints)
{
    for (const auto& k : constraints) {
        bool a = is_selected(p, k.from);
        bool b = is_selected(p, k.to);
        if (k.kind == ConstraintKind::Requires && a && !b)
            return false;
        if (k.kind == ConstraintKind::Excludes && a && b)
            return false;
    }
    return true;
}

} // namespace

std::vector<ApplicationFeatureModel> enumerate_configurations(std::shared_ptr<const FeatureModel> family,
                                                              const EnumerateOptions& options)
{
    if (options.clone_bound < 1)
        throw Error("clone bound must be positive");
    Enumerator e(options);
    Partials all = e.selected(family->root, family->root.name);

    std::vector<ApplicationFeatureModel> out;
    for (const auto& p : all) {
        if (!satisfies(p, family->constraints))
            continue;
        ApplicationFeatureModel app;
        app.family = family;
        for (const auto& [path, sel] : p.states)
            app.states[path] = sel ? DecisionState::Selected : DecisionState::Eliminated;
        for (const auto& [path, k] : p.clones)
            app.clones[path] = k;
        out.push_back(std::move(app));
    }
    return out;
}

} // namespace formweave
