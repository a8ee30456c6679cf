#include "psbf/passivity.hpp"

#include <algorithm>

namespace psbf {

PassivityVerdict detect_passive(const ActionDbn& dbn, int var) {
  const Cpt& c = dbn.state_cpts[var];
  const int dom = c.child_domain;
  if (dom == 1) return {Verdict::passive, {}};

  int self_slot = -1;
  for (std::size_t s = 0; s < c.parents.size(); ++s) {
    if (c.parents[s] == state_t(var)) self_slot = static_cast<int>(s);
  }
  if (self_slot < 0) return {Verdict::active, {}};

  // phi_max candidates with the slots of both copies in this table.
  std::vector<int> phi;
  std::vector<int> phi_t_slot, phi_t1_slot;
  for (std::size_t s = 0; s < c.parents.size(); ++s) {
    const NodeRef& p = c.parents[s];
    if (p.kind != NodeKind::state_t || p.index == var) continue;
    int t1_slot = -1;
    for (std::size_t s2 = 0; s2 < c.parents.size(); ++s2) {
      if (c.parents[s2] == state_t1(p.index)) t1_slot = static_cast<int>(s2);
    }
    if (t1_slot < 0) continue;
    phi.push_back(p.index);
    phi_t_slot.push_back(static_cast<int>(s));
    phi_t1_slot.push_back(t1_slot);
  }

  // Only rows where each phi pair agrees need checking; enumerate exactly
  // those by pinning every phi t+1 slot to its t slot. The child must copy
  // its own t-value with probability 1 on each such row.
  std::vector<std::size_t> stride(c.parents.size(), 1);
  for (int s = static_cast<int>(c.parents.size()) - 2; s >= 0; --s) {
    stride[static_cast<std::size_t>(s)] =
        stride[static_cast<std::size_t>(s + 1)] *
        static_cast<std::size_t>(c.parent_domains[static_cast<std::size_t>(s + 1)]);
  }
  std::vector<char> tied(c.parents.size(), 0);
  for (std::size_t q = 0; q < phi.size(); ++q)
    tied[static_cast<std::size_t>(phi_t1_slot[q])] = 1;
  // A free slot advances the row index by its own stride, plus its partner's
  // when it is the t copy of a phi member.
  std::vector<std::size_t> eff;
  std::vector<int> free_dom;
  std::size_t self_free = 0;
  for (std::size_t s = 0; s < c.parents.size(); ++s) {
    if (tied[s]) continue;
    std::size_t w = stride[s];
    for (std::size_t q = 0; q < phi.size(); ++q) {
      if (phi_t_slot[q] == static_cast<int>(s))
        w += stride[static_cast<std::size_t>(phi_t1_slot[q])];
    }
    if (self_slot == static_cast<int>(s)) self_free = eff.size();
    eff.push_back(w);
    free_dom.push_back(c.parent_domains[s]);
  }
  std::vector<int> digits(eff.size(), 0);
  for (;;) {
    std::size_t r = 0;
    for (std::size_t i = 0; i < eff.size(); ++i)
      r += static_cast<std::size_t>(digits[i]) * eff[i];
    const int own = digits[self_free];
    if (c.row(r)[own] < 1.0 - kDeterministicRowTol) return {Verdict::active, {}};
    int s = static_cast<int>(digits.size()) - 1;
    for (; s >= 0; --s) {
      if (++digits[static_cast<std::size_t>(s)] < free_dom[static_cast<std::size_t>(s)])
        break;
      digits[static_cast<std::size_t>(s)] = 0;
    }
    if (s < 0) break;
  }
  std::sort(phi.begin(), phi.end());
  return {Verdict::passive, std::move(phi)};
}

int PassivityReport::passive_count() const {
  int k = 0;
  for (const PassivityVerdict& v : verdicts) k += v.passive() ? 1 : 0;
  return k;
}

PassivityReport detect_all(const ActionDbn& dbn) {
  const int n = dbn.n();
  PassivityReport report;
  report.verdicts.reserve(n);
  for (int i = 0; i < n; ++i) report.verdicts.push_back(detect_passive(dbn, i));

  // Least fixed point: seed with active variables, then follow intra-slice
  // edges into passive variables whose certifying set contains the source.
  report.reachable.assign(n, 0);
  std::vector<int> queue;
  for (int i = 0; i < n; ++i) {
    if (!report.verdicts[i].passive()) {
      report.reachable[i] = 1;
      queue.push_back(i);
    }
  }
  std::vector<std::vector<int>> succ(n);
  for (const Edge& e : dbn.edges) {
    if (e.first.kind == NodeKind::state_t1 && e.second.kind == NodeKind::state_t1) {
      succ[e.first.index].push_back(e.second.index);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int a = queue[head];
    for (int b : succ[a]) {
      if (report.reachable[b]) continue;
      const PassivityVerdict& v = report.verdicts[b];
      if (!v.passive()) continue;  // already seeded
      if (std::binary_search(v.phi.begin(), v.phi.end(), a)) {
        report.reachable[b] = 1;
        queue.push_back(b);
      }
    }
  }
  return report;
}

bool cluster_skippable(const PassivityReport& report, const std::vector<int>& cluster,
                       const std::vector<int>& modified) {
  for (int v : cluster) {
    if (report.reachable[v]) return false;
    if (std::find(modified.begin(), modified.end(), v) != modified.end()) continue;
    if (!report.verdicts[v].passive()) return false;
  }
  return true;
}

}  // namespace psbf
