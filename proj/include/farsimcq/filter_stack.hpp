#pragma once

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "farsimcq/candidate_gen.hpp"
#include "farsimcq/types.hpp"
#include "farsimcq/written_form.hpp"

namespace farsimcq {

struct TaggedToken {
    std::string token;
    std::string upos;
    std::string deprel;
};

struct Tagger {
    virtual ~Tagger() = default;
    virtual std::string id() const = 0;
    virtual std::vector<TaggedToken> tag(const std::string& sentence) = 0;
};

struct EntityRecognizer {
    virtual ~EntityRecognizer() = default;
    virtual std::string id() const = 0;
    // Entity label for a surface (in optional sentence context), or "" (NONE).
    virtual std::string recognize(const std::string& surface,
                                  const std::string& sentence_context = "") = 0;
    virtual std::vector<std::string> label_set() const = 0;
};

// Deterministic lexicon-backed tagger. Unknown tokens get (X, dep). Lexicon
// file format: token<TAB>upos<TAB>deprel.
class LexiconTagger : public Tagger {
  public:
    explicit LexiconTagger(std::string id = "mock-tagger") : id_(std::move(id)) {}

    static LexiconTagger from_file(const std::string& path, std::string id = "mock-tagger") {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open tagger lexicon " + path);
        LexiconTagger tagger(std::move(id));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto t1 = line.find('\t');
            auto t2 = line.find('\t', t1 == std::string::npos ? 0 : t1 + 1);
            if (t1 == std::string::npos || t2 == std::string::npos)
                throw Error(ErrorCode::MALFORMED_LINE, "tagger lexicon: " + line);
            tagger.add(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                       line.substr(t2 + 1));
        }
        return tagger;
    }

    void add(const std::string& token, const std::string& upos, const std::string& deprel) {
        entries_[strip_edge_punct(to_lower_ascii(normalize_text(token)))] = {upos, deprel};
    }

    std::string id() const override { return id_; }

    std::vector<TaggedToken> tag(const std::string& sentence) override {
        std::vector<TaggedToken> out;
        for (const auto& tok : split_ws(sentence)) {
            std::string key = strip_edge_punct(to_lower_ascii(normalize_text(tok)));
            auto it = entries_.find(key);
            if (digits_only(key) && it == entries_.end()) {
                out.push_back({tok, "NUM", "nummod"});
            } else if (it != entries_.end()) {
                out.push_back({tok, it->second.first, it->second.second});
            } else {
                out.push_back({tok, "X", "dep"});
            }
        }
        return out;
    }

  private:
    std::string id_;
    std::unordered_map<std::string, std::pair<std::string, std::string>> entries_;
};

// Deterministic lexicon-backed recognizer. File format: surface<TAB>LABEL.
class LexiconRecognizer : public EntityRecognizer {
  public:
    explicit LexiconRecognizer(std::string id = "mock-ner") : id_(std::move(id)) {}

    static LexiconRecognizer from_file(const std::string& path, std::string id = "mock-ner") {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open ner lexicon " + path);
        LexiconRecognizer ner(std::move(id));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw Error(ErrorCode::MALFORMED_LINE, "ner lexicon: " + line);
            ner.add(line.substr(0, tab), line.substr(tab + 1));
        }
        return ner;
    }

    void add(const std::string& surface, const std::string& label) {
        entries_[to_lower_ascii(normalize_text(surface))] = label;
        labels_.insert(label);
    }

    std::string id() const override { return id_; }

    std::string recognize(const std::string& surface, const std::string&) override {
        auto it = entries_.find(to_lower_ascii(normalize_text(surface)));
        return it == entries_.end() ? "" : it->second;
    }

    std::vector<std::string> label_set() const override {
        return {labels_.begin(), labels_.end()};
    }

  private:
    std::string id_;
    std::unordered_map<std::string, std::string> entries_;
    std::set<std::string> labels_;
};

enum class AnswerCategory { NUMBERS, OTHERS, ENTITY };

struct AnswerProfile {
    std::string upos;
    std::string deprel;
    std::string entity;  // empty = NONE
    AnswerCategory category = AnswerCategory::OTHERS;
};

namespace detail {

// Token index range [first, last] overlapping the answer span.
inline std::pair<size_t, size_t> span_token_range(const std::string& sentence,
                                                  size_t span_start, size_t span_end) {
    size_t first = SIZE_MAX, last = 0;
    size_t pos = 0, idx = 0;
    size_t i = 0;
    while (i < sentence.size()) {
        while (i < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
        size_t start = i;
        while (i < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
        if (i > start) {
            if (start < span_end && i > span_start) {
                if (first == SIZE_MAX) first = idx;
                last = idx;
            }
            ++idx;
        }
        (void)pos;
    }
    if (first == SIZE_MAX) first = last = 0;
    return {first, last};
}

// Multi-token spans: head token by deprel. Prefer a token whose deprel is
// not a modifier relation; fall back to the last token of the span.
inline size_t head_token_index(const std::vector<TaggedToken>& tagged, size_t first,
                               size_t last) {
    static const std::set<std::string> modifiers = {"amod", "det",     "case",
                                                    "compound", "nummod", "punct"};
    for (size_t i = first; i <= last && i < tagged.size(); ++i)
        if (!modifiers.count(tagged[i].deprel)) return i;
    return std::min(last, tagged.size() - 1);
}

}  // namespace detail

inline AnswerProfile profile_answer(const AnswerSentence& s, Tagger& tagger,
                                    EntityRecognizer& ner) {
    std::vector<TaggedToken> tagged;
    try {
        tagged = tagger.tag(s.text);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::TAGGER_ERROR, e.what());
    }
    if (tagged.empty()) throw Error(ErrorCode::TAGGER_ERROR, "empty tagging");
    auto [first, last] = detail::span_token_range(s.text, s.span_start, s.span_end);
    size_t head = detail::head_token_index(tagged, first, last);

    AnswerProfile profile;
    profile.upos = tagged[head].upos;
    profile.deprel = tagged[head].deprel;
    try {
        profile.entity = ner.recognize(s.answer_slice(), s.text);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::NER_ERROR, e.what());
    }
    std::string written = normalize_written_form(s.answer_slice());
    if (digits_only(written)) profile.category = AnswerCategory::NUMBERS;
    else if (profile.entity.empty()) profile.category = AnswerCategory::OTHERS;
    else profile.category = AnswerCategory::ENTITY;
    return profile;
}

// Substitutes each candidate at the answer span, re-tags, and keeps it iff
// the substituted head token's (upos, deprel) both match the profile.
inline std::vector<Candidate> pos_filter(std::vector<Candidate> cands,
                                         const AnswerSentence& s,
                                         const AnswerProfile& profile, Tagger& tagger,
                                         std::vector<Candidate>* rejected = nullptr) {
    std::vector<Candidate> kept;
    for (auto& c : cands) {
        std::string substituted = s.text;
        substituted.replace(s.span_start, s.span_end - s.span_start, c.surface);
        std::vector<TaggedToken> tagged;
        try {
            tagged = tagger.tag(substituted);
        } catch (const std::exception& e) {
            throw Error(ErrorCode::TAGGER_ERROR, e.what());
        }
        auto [first, last] =
            detail::span_token_range(substituted, s.span_start, s.span_start + c.surface.size());
        size_t head = tagged.empty() ? 0 : detail::head_token_index(tagged, first, last);
        std::string upos = tagged.empty() ? "X" : tagged[head].upos;
        std::string deprel = tagged.empty() ? "dep" : tagged[head].deprel;
        if (upos == profile.upos && deprel == profile.deprel) {
            c.rejections.push_back({FilterStage::POS, true, ""});
            kept.push_back(std::move(c));
        } else {
            std::string reason = upos != profile.upos
                                     ? "upos " + upos + "!=" + profile.upos
                                     : "deprel " + deprel + "!=" + profile.deprel;
            c.rejections.push_back({FilterStage::POS, false, reason});
            if (rejected) rejected->push_back(std::move(c));
        }
    }
    return kept;
}

// Written-form pass: rewrites candidate surfaces; never rejects.
inline std::vector<Candidate> written_form_pass(std::vector<Candidate> cands) {
    for (auto& c : cands) {
        std::string rewritten = normalize_written_form(c.surface);
        if (rewritten != c.surface) c.surface = rewritten;
        c.rejections.push_back({FilterStage::WRITTEN_FORM, true, ""});
    }
    return cands;
}

// NUMBERS: keep digits-only candidates. ENTITY(label): keep matching label.
// OTHERS: pass-through.
inline std::vector<Candidate> ner_filter(std::vector<Candidate> cands,
                                         const AnswerProfile& profile, EntityRecognizer& ner,
                                         std::vector<Candidate>* rejected = nullptr) {
    if (profile.category == AnswerCategory::OTHERS) {
        for (auto& c : cands) c.rejections.push_back({FilterStage::NER, true, ""});
        return cands;
    }
    std::vector<Candidate> kept;
    for (auto& c : cands) {
        bool pass;
        std::string reason;
        if (profile.category == AnswerCategory::NUMBERS) {
            pass = digits_only(normalize_written_form(c.surface));
            if (!pass) reason = "not digits-only";
        } else {
            std::string label;
            try {
                label = ner.recognize(c.surface);
            } catch (const std::exception& e) {
                throw Error(ErrorCode::NER_ERROR, e.what());
            }
            pass = label == profile.entity;
            if (!pass)
                reason = "entity " + (label.empty() ? std::string("NONE") : label) +
                         "!=" + profile.entity;
        }
        c.rejections.push_back({FilterStage::NER, pass, reason});
        if (pass) kept.push_back(std::move(c));
        else if (rejected) rejected->push_back(std::move(c));
    }
    return kept;
}

// Final dedupe: drops candidates equal to the answer or to an earlier
// survivor (under normalize_text). Never relaxed.
inline std::vector<Candidate> dedupe_pass(std::vector<Candidate> cands,
                                          const std::string& answer,
                                          std::vector<Candidate>* rejected = nullptr) {
    std::string norm_answer = normalize_text(answer);
    std::set<std::string> seen;
    std::vector<Candidate> kept;
    for (auto& c : cands) {
        std::string norm = normalize_text(c.surface);
        if (norm.empty() || norm == norm_answer) {
            c.rejections.push_back({FilterStage::DEDUPE, false, "equals answer"});
            if (rejected) rejected->push_back(std::move(c));
        } else if (!seen.insert(norm).second) {
            c.rejections.push_back({FilterStage::DEDUPE, false, "duplicate"});
            if (rejected) rejected->push_back(std::move(c));
        } else {
            c.rejections.push_back({FilterStage::DEDUPE, true, ""});
            kept.push_back(std::move(c));
        }
    }
    return kept;
}

struct FilterResult {
    std::vector<Candidate> survivors;
    std::vector<Candidate> rejected;
    bool relaxed = false;
    std::vector<FilterStage> dropped_stages;
};

struct FilterConfig {
    int distractor_count = 3;
    std::vector<FilterStage> relaxation_policy = {FilterStage::POS, FilterStage::NER};
};

// POS -> written form -> NER -> dedupe. On shortage, re-runs with stages
// dropped per the relaxation policy; dedupe is always last and never relaxed.
inline FilterResult run_filters(const std::vector<Candidate>& cands, const AnswerSentence& s,
                                const AnswerProfile& profile, Tagger& tagger,
                                EntityRecognizer& ner, const std::string& answer,
                                const FilterConfig& cfg = {}) {
    auto run_once = [&](const std::set<FilterStage>& dropped) {
        FilterResult r;
        std::vector<Candidate> pool = cands;
        if (!dropped.count(FilterStage::POS))
            pool = pos_filter(std::move(pool), s, profile, tagger, &r.rejected);
        pool = written_form_pass(std::move(pool));
        if (!dropped.count(FilterStage::NER))
            pool = ner_filter(std::move(pool), profile, ner, &r.rejected);
        r.survivors = dedupe_pass(std::move(pool), answer, &r.rejected);
        return r;
    };

    std::set<FilterStage> dropped;
    FilterResult result = run_once(dropped);
    size_t level = 0;
    while (static_cast<int>(result.survivors.size()) < cfg.distractor_count &&
           level < cfg.relaxation_policy.size()) {
        dropped.insert(cfg.relaxation_policy[level]);
        ++level;
        result = run_once(dropped);
        result.relaxed = true;
        result.dropped_stages.assign(dropped.begin(), dropped.end());
    }
    return result;
}

}  // namespace farsimcq
