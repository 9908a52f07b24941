// Smooth functions of the optimization vector and their analytic derivatives.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "smartpg/case.hpp"

namespace smartpg {

using Eigen::VectorXcd;
using Eigen::VectorXd;

// Canonical flattening order [va | vm | pg | qg]; pg/qg over in-service
// generators in list order.
struct OpfVector {
  VectorXd va, vm, pg, qg;

  VectorXd flat() const {
    VectorXd x(va.size() + vm.size() + pg.size() + qg.size());
    x << va, vm, pg, qg;
    return x;
  }

  static OpfVector from_flat(const VectorXd& x, const Dimensions& d) {
    OpfVector v;
    v.va = x.segment(0, d.n_bus);
    v.vm = x.segment(d.n_bus, d.n_bus);
    v.pg = x.segment(2 * d.n_bus, d.n_gen);
    v.qg = x.segment(2 * d.n_bus + d.n_gen, d.n_gen);
    return v;
  }
};

struct BoundsSpec {
  VectorXd x_min, x_max;
};

// One scalar bound row: upper means x[var] - bound <= 0, else bound - x[var] <= 0.
struct BoundRow {
  int var;
  double bound;
  bool upper;
};

// Precomputed view of a case: admittances, per-unit loads, rated branches,
// bound rows, polynomial costs. Immutable after construction.
class PfModel {
 public:
  explicit PfModel(const GridCase& c) : case_(&c) {
    dim_ = dimensions(c);
    y_ = build_ybus(c);
    act_ = c.active_gens();
    pd_ = VectorXd::Zero(dim_.n_bus);
    qd_ = VectorXd::Zero(dim_.n_bus);
    for (int i = 0; i < dim_.n_bus; ++i) {
      pd_[i] = c.buses[i].pd / c.base_mva;
      qd_[i] = c.buses[i].qd / c.base_mva;
    }
    std::vector<Eigen::Triplet<double>> t;
    for (int g = 0; g < dim_.n_gen; ++g)
      t.emplace_back(c.bus_index(c.gens[act_[g]].bus), g, 1.0);
    cg_.resize(dim_.n_bus, dim_.n_gen);
    cg_.setFromTriplets(t.begin(), t.end());
    ref_ = c.ref_index();
    for (size_t l = 0; l < c.branches.size(); ++l) {
      const Branch& br = c.branches[l];
      if (!br.status || br.rate_a <= 0) continue;
      FlowBranch fb;
      fb.f = c.bus_index(br.from);
      fb.t = c.bus_index(br.to);
      const Complex ys = 1.0 / Complex(br.r, br.x);
      const Complex bc(0, br.b / 2.0);
      const double tau = br.tap == 0 ? 1.0 : br.tap;
      const Complex shift = std::polar(1.0, br.shift);
      fb.ytt = ys + bc;
      fb.yff = fb.ytt / (tau * tau);
      fb.yft = -ys / (tau * std::conj(shift));
      fb.ytf = -ys / (tau * shift);
      fb.rate = br.rate_a / c.base_mva;
      rated_.push_back(fb);
    }
    build_bounds();
  }

  const GridCase& grid() const { return *case_; }
  const Dimensions& dim() const { return dim_; }
  const YbusSet& ybus() const { return y_; }
  const SparseD& cg() const { return cg_; }
  const VectorXd& pd_pu() const { return pd_; }
  const VectorXd& qd_pu() const { return qd_; }
  int ref_bus() const { return ref_; }
  int n_flow() const { return 2 * static_cast<int>(rated_.size()); }
  const std::vector<BoundRow>& bound_rows() const { return bound_rows_; }
  const BoundsSpec& bounds() const { return bounds_; }

  VectorXcd bus_injections(const VectorXd& va, const VectorXd& vm) const {
    VectorXcd v(dim_.n_bus);
    for (int i = 0; i < dim_.n_bus; ++i) v[i] = std::polar(vm[i], va[i]);
    VectorXcd iv = y_.ybus * v;
    return v.cwiseProduct(iv.conjugate());
  }

  // [Re balance; Im balance; ref-angle row], length 2*n_bus + 1.
  VectorXd residual_g(const OpfVector& x) const {
    VectorXcd s = bus_injections(x.va, x.vm);
    VectorXd g(dim_.n_eq);
    g.segment(0, dim_.n_bus) = s.real() + pd_ - cg_ * x.pg;
    g.segment(dim_.n_bus, dim_.n_bus) = s.imag() + qd_ - cg_ * x.qg;
    g[2 * dim_.n_bus] = x.va[ref_] - case_->buses[ref_].va0;
    return g;
  }

  // Squared-apparent-power flow rows: |S|^2 - rate^2 <= 0 feasible.
  VectorXd flow_h(const OpfVector& x) const {
    VectorXd h(n_flow());
    for (size_t l = 0; l < rated_.size(); ++l) {
      const FlowBranch& fb = rated_[l];
      h[2 * l] = std::norm(end_power(fb, x, true)) - fb.rate * fb.rate;
      h[2 * l + 1] = std::norm(end_power(fb, x, false)) - fb.rate * fb.rate;
    }
    return h;
  }

  // Flow rows followed by bound rows, the solver's full inequality vector.
  VectorXd full_h(const OpfVector& x) const {
    VectorXd h(dim_.n_ineq);
    h.segment(0, n_flow()) = flow_h(x);
    const VectorXd xf = x.flat();
    for (size_t r = 0; r < bound_rows_.size(); ++r) {
      const BoundRow& br = bound_rows_[r];
      h[n_flow() + r] = br.upper ? xf[br.var] - br.bound : br.bound - xf[br.var];
    }
    return h;
  }

  double cost_f(const OpfVector& x) const {
    double f = 0;
    for (int g = 0; g < dim_.n_gen; ++g)
      f += polyval(case_->gens[act_[g]].cost, x.pg[g] * case_->base_mva);
    return f;
  }

  VectorXd grad_f(const OpfVector& x) const {
    VectorXd gr = VectorXd::Zero(dim_.n_x);
    for (int g = 0; g < dim_.n_gen; ++g)
      gr[2 * dim_.n_bus + g] =
          polyval_der(case_->gens[act_[g]].cost, x.pg[g] * case_->base_mva) * case_->base_mva;
    return gr;
  }

  SparseD jac_g(const OpfVector& x) const {
    const int nb = dim_.n_bus;
    std::vector<Eigen::Triplet<double>> tr;
    for (int col = 0; col < y_.ybus.outerSize(); ++col) {
      for (SparseC::InnerIterator it(y_.ybus, col); it; ++it) {
        const int i = static_cast<int>(it.row());
        const int k = static_cast<int>(it.col());
        const Complex cy = std::conj(it.value());
        if (i == k) {
          const Complex dvm = 2.0 * cy * x.vm[i];
          tr.emplace_back(i, nb + i, dvm.real());
          tr.emplace_back(nb + i, nb + i, dvm.imag());
        } else {
          const Complex e = std::polar(1.0, x.va[i] - x.va[k]);
          const Complex u = cy * e;             // dS_i/dvm_i dvm_k cross pieces
          const Complex T = u * x.vm[i] * x.vm[k];
          const Complex dva_i = Complex(0, 1) * T;
          push_c(tr, i, nb, i, dva_i);
          push_c(tr, i, nb, k, -dva_i);
          push_c(tr, i, nb, nb + i, u * x.vm[k]);
          push_c(tr, i, nb, nb + k, u * x.vm[i]);
        }
      }
    }
    for (int col = 0; col < cg_.outerSize(); ++col) {
      for (SparseD::InnerIterator it(cg_, col); it; ++it) {
        tr.emplace_back(static_cast<int>(it.row()), 2 * nb + static_cast<int>(it.col()), -1.0);
        tr.emplace_back(nb + static_cast<int>(it.row()),
                        2 * nb + dim_.n_gen + static_cast<int>(it.col()), -1.0);
      }
    }
    tr.emplace_back(2 * nb, ref_, 1.0);
    SparseD j(dim_.n_eq, dim_.n_x);
    j.setFromTriplets(tr.begin(), tr.end());
    return j;
  }

  SparseD jac_flow(const OpfVector& x) const {
    const int nb = dim_.n_bus;
    std::vector<Eigen::Triplet<double>> tr;
    for (size_t l = 0; l < rated_.size(); ++l) {
      for (int side = 0; side < 2; ++side) {
        const int row = 2 * static_cast<int>(l) + side;
        EndTerms et = end_terms(rated_[l], x, side == 0);
        // d|S|^2/du = 2 Re(conj(S) dS/du)
        const Complex cs = 2.0 * std::conj(et.s);
        tr.emplace_back(row, et.p, (cs * et.d_va_p).real());
        tr.emplace_back(row, et.q, (cs * et.d_va_q).real());
        tr.emplace_back(row, nb + et.p, (cs * et.d_vm_p).real());
        tr.emplace_back(row, nb + et.q, (cs * et.d_vm_q).real());
      }
    }
    SparseD j(n_flow(), dim_.n_x);
    j.setFromTriplets(tr.begin(), tr.end());
    return j;
  }

  SparseD jac_full_h(const OpfVector& x) const {
    SparseD jf = jac_flow(x);
    std::vector<Eigen::Triplet<double>> tr;
    for (int col = 0; col < jf.outerSize(); ++col)
      for (SparseD::InnerIterator it(jf, col); it; ++it)
        tr.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (size_t r = 0; r < bound_rows_.size(); ++r)
      tr.emplace_back(n_flow() + static_cast<int>(r), bound_rows_[r].var,
                      bound_rows_[r].upper ? 1.0 : -1.0);
    SparseD j(dim_.n_ineq, dim_.n_x);
    j.setFromTriplets(tr.begin(), tr.end());
    return j;
  }

  // Hessian of f + lambda' g + mu_flow' h_flow (bound rows are linear).
  SparseD hess_lagrangian(const OpfVector& x, const VectorXd& lambda,
                          const VectorXd& mu_flow) const {
    const int nb = dim_.n_bus;
    std::vector<Eigen::Triplet<double>> tr;
    // Cost curvature, pg block.
    for (int g = 0; g < dim_.n_gen; ++g) {
      const double d2 = polyval_der2(case_->gens[act_[g]].cost, x.pg[g] * case_->base_mva) *
                        case_->base_mva * case_->base_mva;
      if (d2 != 0) tr.emplace_back(2 * nb + g, 2 * nb + g, d2);
    }
    // Power-balance part: Re(sum_i c_i d2 S_i), c_i = lamP_i - j lamQ_i.
    for (int col = 0; col < y_.ybus.outerSize(); ++col) {
      for (SparseC::InnerIterator it(y_.ybus, col); it; ++it) {
        const int i = static_cast<int>(it.row());
        const int k = static_cast<int>(it.col());
        const Complex c(lambda[i], -lambda[nb + i]);
        const Complex cy = c * std::conj(it.value());
        if (i == k) {
          add_sym(tr, nb + i, nb + i, (2.0 * cy).real());
        } else {
          const Complex e = std::polar(1.0, x.va[i] - x.va[k]);
          const Complex u = cy * e;
          const Complex T = u * x.vm[i] * x.vm[k];
          add_sym(tr, i, i, (-T).real());
          add_pair(tr, i, k, T.real());
          add_sym(tr, k, k, (-T).real());
          add_pair(tr, nb + i, nb + k, u.real());
          add_pair(tr, i, nb + i, (Complex(0, 1) * u * x.vm[k]).real());
          add_pair(tr, i, nb + k, (Complex(0, 1) * u * x.vm[i]).real());
          add_pair(tr, k, nb + i, (-Complex(0, 1) * u * x.vm[k]).real());
          add_pair(tr, k, nb + k, (-Complex(0, 1) * u * x.vm[i]).real());
        }
      }
    }
    // Flow part: mu * (2 Re(conj(dS) dS' + conj(S) d2S)).
    for (size_t l = 0; l < rated_.size(); ++l) {
      for (int side = 0; side < 2; ++side) {
        const double mu = mu_flow[2 * l + side];
        if (mu == 0) continue;
        EndTerms et = end_terms(rated_[l], x, side == 0);
        const int idx[4] = {et.p, et.q, nb + et.p, nb + et.q};
        const Complex d1[4] = {et.d_va_p, et.d_va_q, et.d_vm_p, et.d_vm_q};
        Complex d2[4][4] = {};
        const Complex bterm = et.b * et.e;
        const Complex bm = bterm * x.vm[et.p] * x.vm[et.q];
        d2[0][0] = -bm;              // va_p va_p
        d2[0][1] = bm;               // va_p va_q
        d2[1][1] = -bm;              // va_q va_q
        d2[2][2] = 2.0 * et.a;       // vm_p vm_p
        d2[2][3] = bterm;            // vm_p vm_q
        d2[0][2] = Complex(0, 1) * bterm * x.vm[et.q];   // va_p vm_p
        d2[0][3] = Complex(0, 1) * bterm * x.vm[et.p];   // va_p vm_q
        d2[1][2] = -Complex(0, 1) * bterm * x.vm[et.q];  // va_q vm_p
        d2[1][3] = -Complex(0, 1) * bterm * x.vm[et.p];  // va_q vm_q
        const Complex cs = std::conj(et.s);
        for (int a = 0; a < 4; ++a) {
          for (int b = a; b < 4; ++b) {
            double v = 2.0 * mu * (std::conj(d1[a]) * d1[b] + cs * d2[a][b]).real();
            if (v == 0) continue;
            if (a == b) add_sym(tr, idx[a], idx[a], v);
            else add_pair(tr, idx[a], idx[b], v);
          }
        }
      }
    }
    SparseD h(dim_.n_x, dim_.n_x);
    h.setFromTriplets(tr.begin(), tr.end());
    return h;
  }

  static double polyval(const std::vector<double>& c, double x) {
    double v = 0;
    for (double ci : c) v = v * x + ci;
    return v;
  }
  static double polyval_der(const std::vector<double>& c, double x) {
    const int n = static_cast<int>(c.size());
    double v = 0;
    for (int i = 0; i < n - 1; ++i) v = v * x + c[i] * (n - 1 - i);
    return v;
  }
  static double polyval_der2(const std::vector<double>& c, double x) {
    const int n = static_cast<int>(c.size());
    double v = 0;
    for (int i = 0; i < n - 2; ++i)
      v = v * x + c[i] * (n - 1 - i) * (n - 2 - i);
    return v;
  }

  struct FlowBranch {
    int f = 0, t = 0;
    Complex yff, yft, ytf, ytt;
    double rate = 0;
  };
  const std::vector<FlowBranch>& flow_branches() const { return rated_; }
  const std::vector<int>& active() const { return act_; }

 private:

  // End power as a vm_p^2 + b vm_p vm_q e^{j(va_p - va_q)} with p the
  // metered bus of the selected end and q the far bus.
  struct EndTerms {
    int p = 0, q = 0;
    Complex a, b, e, s;
    Complex d_va_p, d_va_q, d_vm_p, d_vm_q;
  };

  EndTerms end_terms(const FlowBranch& fb, const OpfVector& x, bool from_side) const {
    EndTerms et;
    if (from_side) {
      et.p = fb.f;
      et.q = fb.t;
      et.a = std::conj(fb.yff);
      et.b = std::conj(fb.yft);
    } else {
      et.p = fb.t;
      et.q = fb.f;
      et.a = std::conj(fb.ytt);
      et.b = std::conj(fb.ytf);
    }
    et.e = std::polar(1.0, x.va[et.p] - x.va[et.q]);
    const double vp = x.vm[et.p], vq = x.vm[et.q];
    et.s = et.a * vp * vp + et.b * vp * vq * et.e;
    const Complex cross = et.b * vp * vq * et.e;
    et.d_va_p = Complex(0, 1) * cross;
    et.d_va_q = -Complex(0, 1) * cross;
    et.d_vm_p = 2.0 * et.a * vp + et.b * vq * et.e;
    et.d_vm_q = et.b * vp * et.e;
    return et;
  }

  Complex end_power(const FlowBranch& fb, const OpfVector& x, bool from_side) const {
    return end_terms(fb, x, from_side).s;
  }

  static void push_c(std::vector<Eigen::Triplet<double>>& tr, int row, int nb, int col,
                     const Complex& v) {
    tr.emplace_back(row, col, v.real());
    tr.emplace_back(nb + row, col, v.imag());
  }
  static void add_sym(std::vector<Eigen::Triplet<double>>& tr, int i, int j, double v) {
    tr.emplace_back(i, j, v);
  }
  static void add_pair(std::vector<Eigen::Triplet<double>>& tr, int i, int j, double v) {
    tr.emplace_back(i, j, v);
    tr.emplace_back(j, i, v);
  }

  void build_bounds() {
    const double inf = std::numeric_limits<double>::infinity();
    const int nb = dim_.n_bus, ng = dim_.n_gen;
    bounds_.x_min = VectorXd::Constant(dim_.n_x, -inf);
    bounds_.x_max = VectorXd::Constant(dim_.n_x, inf);
    bounds_.x_min[ref_] = bounds_.x_max[ref_] = case_->buses[ref_].va0;
    for (int i = 0; i < nb; ++i) {
      bounds_.x_min[nb + i] = case_->buses[i].vm_min;
      bounds_.x_max[nb + i] = case_->buses[i].vm_max;
    }
    for (int g = 0; g < ng; ++g) {
      const Generator& gen = case_->gens[act_[g]];
      bounds_.x_min[2 * nb + g] = gen.pmin / case_->base_mva;
      bounds_.x_max[2 * nb + g] = gen.pmax / case_->base_mva;
      bounds_.x_min[2 * nb + ng + g] = gen.qmin / case_->base_mva;
      bounds_.x_max[2 * nb + ng + g] = gen.qmax / case_->base_mva;
    }
    for (int v = 0; v < dim_.n_x; ++v) {
      const double lo = bounds_.x_min[v], hi = bounds_.x_max[v];
      if (lo >= hi) continue;  // pinned -> equality, not inequality
      if (std::isfinite(hi)) bound_rows_.push_back({v, hi, true});
      if (std::isfinite(lo)) bound_rows_.push_back({v, lo, false});
    }
  }

  const GridCase* case_;
  Dimensions dim_;
  YbusSet y_;
  std::vector<int> act_;
  SparseD cg_;
  VectorXd pd_, qd_;
  int ref_ = 0;
  std::vector<FlowBranch> rated_;
  BoundsSpec bounds_;
  std::vector<BoundRow> bound_rows_;
};

}  // namespace smartpg
