#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "farsimcq/error.hpp"
#include "farsimcq/text.hpp"

namespace farsimcq {

struct Triple {
    size_t head = 0, rel = 0, tail = 0;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleStore {
    std::vector<std::string> entity_labels;    // original surfaces
    std::vector<std::string> relation_labels;
    std::unordered_map<std::string, size_t> entity_index;    // normalized label -> idx
    std::unordered_map<std::string, size_t> relation_index;
    std::vector<Triple> triples;  // deduplicated, load order preserved

    size_t entity_count() const { return entity_labels.size(); }
    size_t relation_count() const { return relation_labels.size(); }

    size_t intern_entity(const std::string& label) {
        std::string norm = normalize_text(label);
        if (norm.empty()) throw Error(ErrorCode::MALFORMED_LINE, "empty entity label");
        auto it = entity_index.find(norm);
        // Labels normalizing identically collapse to one node; the first
        // surface form seen is kept.
        if (it != entity_index.end()) return it->second;
        entity_index[norm] = entity_labels.size();
        entity_labels.push_back(label);
        return entity_labels.size() - 1;
    }

    size_t intern_relation(const std::string& label) {
        std::string norm = normalize_text(label);
        if (norm.empty()) throw Error(ErrorCode::MALFORMED_LINE, "empty relation label");
        auto it = relation_index.find(norm);
        if (it != relation_index.end()) return it->second;
        relation_index[norm] = relation_labels.size();
        relation_labels.push_back(label);
        return relation_labels.size() - 1;
    }

    void add(const std::string& head, const std::string& rel, const std::string& tail) {
        Triple t{intern_entity(head), intern_relation(rel), intern_entity(tail)};
        if (dedupe_.insert(t).second) triples.push_back(t);
    }

    // Triple file: head<TAB>relation<TAB>tail per line.
    static TripleStore load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open triples " + path);
        TripleStore store;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto t1 = line.find('\t');
            auto t2 = line.find('\t', t1 == std::string::npos ? 0 : t1 + 1);
            if (t1 == std::string::npos || t2 == std::string::npos)
                throw Error(ErrorCode::MALFORMED_LINE, "triple: " + line);
            store.add(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                      line.substr(t2 + 1));
        }
        return store;
    }

  private:
    std::set<Triple> dedupe_;
};

// Exact match of normalize_text(surface) against normalized entity labels;
// no fuzzy matching.
inline std::optional<std::string> link_entity(const TripleStore& store,
                                              const std::string& surface) {
    auto it = store.entity_index.find(normalize_text(surface));
    if (it == store.entity_index.end()) return std::nullopt;
    return store.entity_labels[it->second];
}

struct TrainConfig {
    size_t dim = 50;
    double learning_rate = 0.05;
    size_t epochs = 100;
    size_t negatives_per_positive = 5;
    double l2_lambda = 1e-3;
    uint64_t seed = 0;

    void validate() const {
        if (dim == 0 || learning_rate <= 0 || negatives_per_positive == 0 || l2_lambda < 0)
            throw Error(ErrorCode::CONFIG_ERROR, "invalid training config");
    }
};

// Entity/relation embeddings as paired real+imaginary matrices, row-major.
struct ComplexEmbedding {
    size_t dim = 0;
    std::vector<std::vector<double>> entity_re, entity_im;
    std::vector<std::vector<double>> rel_re, rel_im;

    size_t entity_count() const { return entity_re.size(); }
    size_t relation_count() const { return rel_re.size(); }
};

// Re(sum_k w_r[k] * e_h[k] * conj(e_t[k])).
inline double complex_score(const ComplexEmbedding& emb, size_t h, size_t r, size_t t) {
    if (h >= emb.entity_count() || t >= emb.entity_count() || r >= emb.relation_count())
        throw Error(ErrorCode::INDEX_OUT_OF_RANGE, "triple index");
    const auto &hr = emb.entity_re[h], &hi = emb.entity_im[h];
    const auto &rr = emb.rel_re[r], &ri = emb.rel_im[r];
    const auto &tr = emb.entity_re[t], &ti = emb.entity_im[t];
    double s = 0;
    for (size_t k = 0; k < emb.dim; ++k)
        s += rr[k] * (hr[k] * tr[k] + hi[k] * ti[k]) + ri[k] * (hi[k] * tr[k] - hr[k] * ti[k]);
    return s;
}

namespace kgdetail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + exp(x)), overflow-safe.
inline double softplus(double x) {
    if (x > 30) return x;
    if (x < -30) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sq_norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace kgdetail

// Per-example logistic loss with L2 on the three involved embedding rows:
//   -log sigma(label * score) + lambda * (|h|^2 + |w_r|^2 + |t|^2)
// label is +1 for positives, -1 for corrupted negatives.
inline double example_loss(const ComplexEmbedding& emb, const Triple& triple, int label,
                           double l2_lambda) {
    double s = complex_score(emb, triple.head, triple.rel, triple.tail);
    double loss = kgdetail::softplus(-label * s);
    loss += l2_lambda * (kgdetail::sq_norm(emb.entity_re[triple.head]) +
                         kgdetail::sq_norm(emb.entity_im[triple.head]) +
                         kgdetail::sq_norm(emb.rel_re[triple.rel]) +
                         kgdetail::sq_norm(emb.rel_im[triple.rel]) +
                         kgdetail::sq_norm(emb.entity_re[triple.tail]) +
                         kgdetail::sq_norm(emb.entity_im[triple.tail]));
    return loss;
}

struct ExampleGradient {
    std::vector<double> head_re, head_im, rel_re, rel_im, tail_re, tail_im;
};

// Analytic gradient of example_loss w.r.t. the involved rows. When head and
// tail coincide, both contributions accumulate into the same row as callers
// apply head and tail parts to the shared row in sequence; for the self-loop
// case the returned parts are already summed per slot.
inline ExampleGradient example_gradient(const ComplexEmbedding& emb, const Triple& triple,
                                        int label, double l2_lambda) {
    const auto &hr = emb.entity_re[triple.head], &hi = emb.entity_im[triple.head];
    const auto &rr = emb.rel_re[triple.rel], &ri = emb.rel_im[triple.rel];
    const auto &tr = emb.entity_re[triple.tail], &ti = emb.entity_im[triple.tail];
    double s = complex_score(emb, triple.head, triple.rel, triple.tail);
    // d/ds of softplus(-label*s) = -label * sigma(-label*s)
    double g = -label * kgdetail::sigmoid(-label * s);

    bool self_loop = triple.head == triple.tail;
    ExampleGradient grad;
    grad.head_re.resize(emb.dim);
    grad.head_im.resize(emb.dim);
    grad.rel_re.resize(emb.dim);
    grad.rel_im.resize(emb.dim);
    grad.tail_re.resize(emb.dim);
    grad.tail_im.resize(emb.dim);
    for (size_t k = 0; k < emb.dim; ++k) {
        double ds_dhr = rr[k] * tr[k] - ri[k] * ti[k];
        double ds_dhi = rr[k] * ti[k] + ri[k] * tr[k];
        double ds_dtr = rr[k] * hr[k] + ri[k] * hi[k];
        double ds_dti = rr[k] * hi[k] - ri[k] * hr[k];
        double ds_drr = hr[k] * tr[k] + hi[k] * ti[k];
        double ds_dri = hi[k] * tr[k] - hr[k] * ti[k];
        grad.head_re[k] = g * ds_dhr + 2 * l2_lambda * hr[k];
        grad.head_im[k] = g * ds_dhi + 2 * l2_lambda * hi[k];
        grad.rel_re[k] = g * ds_drr + 2 * l2_lambda * rr[k];
        grad.rel_im[k] = g * ds_dri + 2 * l2_lambda * ri[k];
        grad.tail_re[k] = g * ds_dtr + 2 * l2_lambda * tr[k];
        grad.tail_im[k] = g * ds_dti + 2 * l2_lambda * ti[k];
        if (self_loop) {
            // Shared row: head and tail contributions sum, and the L2 term
            // appears twice in example_loss for this row.
            double sum_re = g * (ds_dhr + ds_dtr) + 4 * l2_lambda * hr[k];
            double sum_im = g * (ds_dhi + ds_dti) + 4 * l2_lambda * hi[k];
            grad.head_re[k] = sum_re;
            grad.head_im[k] = sum_im;
            grad.tail_re[k] = 0;
            grad.tail_im[k] = 0;
        }
    }
    return grad;
}

// SGD training on binary logistic loss with uniformly corrupted
// head-or-tail negatives. Fixed seed => bit-identical output.
inline ComplexEmbedding train(const TripleStore& store, const TrainConfig& cfg) {
    cfg.validate();
    if (store.triples.empty()) throw Error(ErrorCode::EMPTY_STORE, "no triples");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> init(-0.1, 0.1);
    auto init_matrix = [&](size_t rows, size_t dim) {
        std::vector<std::vector<double>> m(rows, std::vector<double>(dim));
        for (auto& row : m)
            for (double& x : row) x = init(rng);
        return m;
    };

    ComplexEmbedding emb;
    emb.dim = cfg.dim;
    emb.entity_re = init_matrix(store.entity_count(), cfg.dim);
    emb.entity_im = init_matrix(store.entity_count(), cfg.dim);
    emb.rel_re = init_matrix(store.relation_count(), cfg.dim);
    emb.rel_im = init_matrix(store.relation_count(), cfg.dim);

    std::uniform_int_distribution<size_t> entity_dist(0, store.entity_count() - 1);
    std::uniform_int_distribution<int> coin(0, 1);

    auto apply = [&](const Triple& triple, int label) {
        ExampleGradient g = example_gradient(emb, triple, label, cfg.l2_lambda);
        double lr = cfg.learning_rate;
        for (size_t k = 0; k < cfg.dim; ++k) {
            emb.entity_re[triple.head][k] -= lr * g.head_re[k];
            emb.entity_im[triple.head][k] -= lr * g.head_im[k];
            emb.rel_re[triple.rel][k] -= lr * g.rel_re[k];
            emb.rel_im[triple.rel][k] -= lr * g.rel_im[k];
            emb.entity_re[triple.tail][k] -= lr * g.tail_re[k];
            emb.entity_im[triple.tail][k] -= lr * g.tail_im[k];
        }
    };

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const Triple& pos : store.triples) {
            apply(pos, +1);
            for (size_t n = 0; n < cfg.negatives_per_positive; ++n) {
                Triple neg = pos;
                if (coin(rng)) neg.head = entity_dist(rng);
                else neg.tail = entity_dist(rng);
                apply(neg, -1);
            }
        }
    }
    return emb;
}

// Cosine over concatenated [entity_re | entity_im] rows; MISSING (nullopt)
// when either label is unlinked in the store.
inline std::optional<double> entity_similarity(const ComplexEmbedding& emb,
                                               const TripleStore& store,
                                               const std::string& a, const std::string& b) {
    auto ia = store.entity_index.find(normalize_text(a));
    auto ib = store.entity_index.find(normalize_text(b));
    if (ia == store.entity_index.end() || ib == store.entity_index.end()) return std::nullopt;
    size_t ra = ia->second, rb = ib->second;
    double dot = 0, na = 0, nb = 0;
    for (size_t k = 0; k < emb.dim; ++k) {
        double are = emb.entity_re[ra][k], aim = emb.entity_im[ra][k];
        double bre = emb.entity_re[rb][k], bim = emb.entity_im[rb][k];
        dot += are * bre + aim * bim;
        na += are * are + aim * aim;
        nb += bre * bre + bim * bim;
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Filtered link-prediction MRR over the given triples (head and tail
// corruptions; other true triples excluded from the ranking).
inline double filtered_mrr(const ComplexEmbedding& emb, const TripleStore& store) {
    std::set<Triple> known(store.triples.begin(), store.triples.end());
    double sum_rr = 0;
    size_t n = 0;
    for (const Triple& t : store.triples) {
        double true_score = complex_score(emb, t.head, t.rel, t.tail);
        for (int side = 0; side < 2; ++side) {
            size_t rank = 1;
            for (size_t e = 0; e < store.entity_count(); ++e) {
                Triple corrupted = t;
                (side == 0 ? corrupted.head : corrupted.tail) = e;
                if (corrupted == t || known.count(corrupted)) continue;
                if (complex_score(emb, corrupted.head, corrupted.rel, corrupted.tail) >
                    true_score)
                    ++rank;
            }
            sum_rr += 1.0 / static_cast<double>(rank);
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum_rr / static_cast<double>(n);
}

// Save format: header "E R dim", then one row per line, 17 significant
// digits; entity_re, entity_im, rel_re, rel_im blocks in order.
inline void save_embedding(const ComplexEmbedding& emb, std::ostream& out) {
    out << emb.entity_count() << ' ' << emb.relation_count() << ' ' << emb.dim << '\n';
    out << std::setprecision(17);
    auto dump = [&](const std::vector<std::vector<double>>& m) {
        for (const auto& row : m) {
            for (size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << row[k];
            out << '\n';
        }
    };
    dump(emb.entity_re);
    dump(emb.entity_im);
    dump(emb.rel_re);
    dump(emb.rel_im);
    if (!out) throw Error(ErrorCode::IO_ERROR, "embedding write failed");
}

inline void save_embedding(const ComplexEmbedding& emb, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IO_ERROR, "cannot open " + path);
    save_embedding(emb, out);
}

inline ComplexEmbedding load_embedding(std::istream& in) {
    size_t e, r, dim;
    if (!(in >> e >> r >> dim)) throw Error(ErrorCode::MALFORMED_LINE, "embedding header");
    ComplexEmbedding emb;
    emb.dim = dim;
    auto read = [&](std::vector<std::vector<double>>& m, size_t rows) {
        m.assign(rows, std::vector<double>(dim));
        for (auto& row : m)
            for (double& x : row)
                if (!(in >> x)) throw Error(ErrorCode::MALFORMED_LINE, "embedding row");
    };
    read(emb.entity_re, e);
    read(emb.entity_im, e);
    read(emb.rel_re, r);
    read(emb.rel_im, r);
    return emb;
}

inline ComplexEmbedding load_embedding(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open " + path);
    return load_embedding(in);
}

}  // namespace farsimcq
