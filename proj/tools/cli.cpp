// Copyright 2026 The iseeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "iseeq/iseeq.hpp"

namespace iseeq::cli {
namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigFlag {
  const char* key;
  const char* flag;
  const char* help;
};

// Every default is tagged as a reference setting (taken from the method's
// published configuration) or an engineering default chosen for this tool.
const std::vector<ConfigFlag>& config_flags() {
  static const std::vector<ConfigFlag> flags = {
      {"alpha", "--alpha", "LCS weight in the reward [default 0.1971] (reference setting)"},
      {"gamma", "--gamma", "EMA decay for the epoch loss [default 0.12] (reference setting)"},
      {"nes_threshold", "--nes-threshold", "keep passages with NES strictly above this [default 0.80] (reference setting)"},
      {"top_k", "--top-k", "passages kept per query; also the MAP cutoff [default 20] (reference setting)"},
      {"top_n", "--top-n", "SITQ candidates scored per query [default 100] (reference setting)"},
      {"code_bits", "--bits", "SITQ code length in bits [default 64] (engineering default)"},
      {"itq_iters", "--itq-iters", "ITQ iterations [default 50] (engineering default)"},
      {"probe", "--probe", "Hamming-ranked codes re-scored exactly [default 8 x top-n] (engineering default)"},
      {"seed", "--seed", "seed for the ITQ initial rotation [default 42] (engineering default)"},
      {"cosine_relevance", "--cosine-relevance",
       "question cosine above which a passage counts as relevant [default 0.70] (reference setting)"},
      {"max_hops", "--max-hops", "KG expansion depth [default 2] (engineering default)"},
      {"max_triples_per_entity", "--max-triples", "triples injected per entity [default 8] (engineering default)"},
      {"threads", "--threads", "worker threads for per-query work [default 1] (engineering default)"},
  };
  return flags;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

json config_json(const RunConfig& c) {
  return {{"alpha", c.alpha},
          {"gamma", c.gamma},
          {"nes_threshold", c.nes_threshold},
          {"top_k", c.top_k},
          {"top_n", c.top_n},
          {"code_bits", c.code_bits},
          {"itq_iters", c.itq_iters},
          {"probe", c.probe_or_default()},
          {"seed", c.seed},
          {"cosine_relevance", c.cosine_relevance},
          {"max_hops", c.max_hops},
          {"max_triples_per_entity", c.max_triples_per_entity}};
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; the first exception
// is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

KgFormat parse_kg_format(const std::string& s) {
  if (s == "tsv") return KgFormat::kTsv;
  if (s == "conceptnet") return KgFormat::kConceptNet;
  throw UsageError("--kg-format must be tsv or conceptnet");
}

struct Context {
  RunConfig cfg;
  std::shared_ptr<spdlog::logger> log;
};

KnowledgeGraph load_graph(const Context& ctx, const std::string& path, const std::string& format, bool lenient) {
  auto res = load_kg(path, parse_kg_format(format), lenient ? ParseMode::kLenient : ParseMode::kStrict);
  for (const auto& w : res.warnings) ctx.log->warn("{}", w);
  ctx.log->debug("loaded KG {}: {} entities, {} triples", path, res.graph.entity_count(), res.graph.triple_count());
  return std::move(res.graph);
}

std::unordered_map<std::string, std::vector<std::string>> read_phrases(const std::string& path) {
  std::unordered_map<std::string, std::vector<std::string>> out;
  io::for_each_jsonl_file(path, [&](std::size_t line, const json& j) {
    const auto id = j.at("id").get<std::string>();
    if (!out.emplace(id, j.at("phrases").get<std::vector<std::string>>()).second) {
      throw ParseError(path, line, "duplicate phrase entry for " + id);
    }
  });
  return out;
}

std::vector<ExpandedQuery> expand_all(const Context& ctx, const KnowledgeGraph& kg,
                                      const std::vector<QueryDescription>& queries,
                                      const std::optional<std::string>& phrases_path) {
  const ExpandOptions opts = ctx.cfg.expansion();
  std::optional<std::unordered_map<std::string, std::vector<std::string>>> phrases;
  if (phrases_path) phrases = read_phrases(*phrases_path);
  std::vector<ExpandedQuery> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    if (phrases) {
      const auto it = phrases->find(q.id);
      static const std::vector<std::string> kNone;
      out.push_back(expand_query_with_phrases(kg, q, it == phrases->end() ? kNone : it->second, opts));
    } else {
      out.push_back(expand_query(kg, q, opts));
    }
    ctx.log->debug("query {}: {} entities", q.id, out.back().entities.size());
  }
  return out;
}

// ---- retrieval inputs --------------------------------------------------------

struct RetrievalInputs {
  std::string kg;
  std::string kg_format = "tsv";
  std::string queries;
  std::string expanded;
  std::string phrases;
  std::string word_vectors;
  std::string query_vectors;
  std::string passage_vectors;
};

void add_retrieval_options(CLI::App* sub, RetrievalInputs& in) {
  sub->add_option("--kg", in.kg, "KG TSV used to expand --queries");
  sub->add_option("--kg-format", in.kg_format, "tsv or conceptnet")->capture_default_str();
  sub->add_option("--queries", in.queries, "queries JSONL {id, text, kind}");
  sub->add_option("--expanded", in.expanded, "expand-query output JSONL (instead of --kg/--queries)");
  sub->add_option("--phrases", in.phrases, "external noun phrases JSONL {id, phrases}");
  sub->add_option("--word-vectors", in.word_vectors, "token embeddings (JSONL or binary)")->required();
  sub->add_option("--query-vectors", in.query_vectors, "query sentence vectors keyed by query id");
  sub->add_option("--passage-vectors", in.passage_vectors, "passage sentence vectors keyed by passage id");
}

std::vector<ExpandedQuery> load_expanded(const Context& ctx, const RetrievalInputs& in) {
  if (!in.expanded.empty()) {
    if (!in.queries.empty()) throw UsageError("give either --expanded or --queries, not both");
    return formats::read_expanded(in.expanded);
  }
  if (in.queries.empty() || in.kg.empty()) throw UsageError("need --expanded, or --kg with --queries");
  const auto kg = load_graph(ctx, in.kg, in.kg_format, false);
  std::optional<std::string> phrases;
  if (!in.phrases.empty()) phrases = in.phrases;
  return expand_all(ctx, kg, formats::read_queries(in.queries), phrases);
}

struct Corpus {
  VectorStore words;
  TokenDocTable docs;
};

// Token documents for passages; passages with no known token get none (their
// WMD is reported as null).
void add_token_docs(const Context& ctx, Corpus& corpus, const std::vector<Passage>& passages) {
  std::size_t missing = 0;
  for (const auto& p : passages) {
    const auto has_vocab = std::any_of(p.tokens.begin(), p.tokens.end(),
                                       [&](const std::string& t) { return corpus.words.find(t).has_value(); });
    if (!has_vocab) {
      ++missing;
      continue;
    }
    corpus.docs.emplace(p.id, build_token_doc(p.id, p.tokens, corpus.words));
  }
  if (missing) ctx.log->warn("{} passages have no token in the vocabulary", missing);
}

// Sentence vectors: from the file when given, else the mean token embedding.
VectorStore passage_store(const Corpus& corpus, const std::vector<Passage>& passages, const std::string& path) {
  std::optional<VectorStore> given;
  if (!path.empty()) given = load_vectors(path);
  std::vector<std::string> ids;
  std::vector<float> m;
  const std::size_t dim = given ? given->dim() : corpus.words.dim();
  for (const auto& p : passages) {
    ids.push_back(p.id);
    if (given) {
      const auto r = given->find(p.id);
      if (!r) throw DataError("no vector for passage " + p.id);
      const auto row = given->row(*r);
      m.insert(m.end(), row.begin(), row.end());
    } else {
      const auto v = mean_embedding(p.tokens, corpus.words);
      m.insert(m.end(), v.begin(), v.end());
    }
  }
  return VectorStore(dim, std::move(ids), std::move(m));
}

std::vector<PreparedQuery> prepare_queries(const Corpus& corpus, std::vector<ExpandedQuery> expanded,
                                           const std::string& query_vectors) {
  std::optional<VectorStore> given;
  if (!query_vectors.empty()) given = load_vectors(query_vectors);
  std::vector<PreparedQuery> out;
  for (auto& eq : expanded) {
    const auto toks = text::words(eq.augmented_text);
    PreparedQuery pq;
    if (given) {
      const auto r = given->find(eq.source.id);
      if (!r) throw DataError("no vector for query " + eq.source.id);
      const auto row = given->row(*r);
      pq.vec.assign(row.begin(), row.end());
    } else {
      pq.vec = mean_embedding(toks, corpus.words);
    }
    pq.tokens = build_token_doc(eq.source.id, toks, corpus.words);
    pq.eq = std::move(eq);
    out.push_back(std::move(pq));
  }
  return out;
}

// ---- subcommands -------------------------------------------------------------

void warn_retrieval_setup(const Context& ctx, const std::vector<PreparedQuery>& queries) {
  if (ctx.cfg.probe && *ctx.cfg.probe < ctx.cfg.top_n) {
    ctx.log->warn("probe {} is below top-n {}; raised to {}", *ctx.cfg.probe, ctx.cfg.top_n, ctx.cfg.top_n);
  }
  for (const auto& q : queries) {
    if (q.eq.entities.empty()) {
      ctx.log->warn("query {} has no KG entities; its NES is 0 for every passage", q.eq.source.id);
    }
  }
}

int cmd_kg_stats(const Context& ctx, const std::string& path, const std::string& format, bool lenient,
                 std::ostream& out) {
  auto res = load_kg(path, parse_kg_format(format), lenient ? ParseMode::kLenient : ParseMode::kStrict);
  for (const auto& w : res.warnings) ctx.log->warn("{}", w);
  emit(out, {{"path", path},
             {"entities", res.graph.entity_count()},
             {"triples", res.graph.triple_count()},
             {"skipped_lines", res.warnings.size()}});
  return kExitOk;
}

int cmd_expand(const Context& ctx, const std::string& kg_path, const std::string& format,
               const std::string& queries, const std::string& phrases, std::ostream& out) {
  const auto kg = load_graph(ctx, kg_path, format, false);
  std::optional<std::string> ph;
  if (!phrases.empty()) ph = phrases;
  for (const auto& eq : expand_all(ctx, kg, formats::read_queries(queries), ph)) {
    out << formats::to_json(eq).dump() << '\n';
  }
  return kExitOk;
}

int cmd_build_index(const Context& ctx, const std::string& vectors, const std::string& out_path, std::ostream& out) {
  auto store = std::make_shared<const VectorStore>(load_vectors(vectors));
  std::vector<std::string> warnings;
  const auto index = SitqIndex::build(store, ctx.cfg.sitq(), &warnings);
  for (const auto& w : warnings) ctx.log->warn("{}", w);
  index.save(out_path);
  const auto& obj = index.itq_objective();
  emit(out, {{"vectors", store->size()},
             {"dim", store->dim()},
             {"code_bits", index.code_bits()},
             {"itq_iters", ctx.cfg.itq_iters},
             {"seed", ctx.cfg.seed},
             {"objective_first", obj.empty() ? 0.0 : obj.front()},
             {"objective_last", obj.empty() ? 0.0 : obj.back()},
             {"out", out_path}});
  return kExitOk;
}

int cmd_retrieve(const Context& ctx, const RetrievalInputs& in, const std::string& passages_path,
                 const std::string& index_path, std::ostream& out) {
  Corpus corpus{load_vectors(in.word_vectors), {}};
  const auto passages = formats::read_passages(passages_path);
  if (passages.empty()) throw DataError("no passages in " + passages_path);
  add_token_docs(ctx, corpus, passages);
  PassageTable table;
  for (const auto& p : passages) table.emplace(p.id, p);
  auto store = std::make_shared<const VectorStore>(passage_store(corpus, passages, in.passage_vectors));
  const auto queries = prepare_queries(corpus, load_expanded(ctx, in), in.query_vectors);
  warn_retrieval_setup(ctx, queries);

  std::vector<std::string> warnings;
  const SitqIndex index =
      index_path.empty() ? SitqIndex::build(store, ctx.cfg.sitq(), &warnings) : SitqIndex::load(index_path, store);
  for (const auto& w : warnings) ctx.log->warn("{}", w);

  const RetrieveParams rp = ctx.cfg.retrieval();
  std::vector<RetrievalResult> results(queries.size());
  parallel_for(queries.size(), ctx.cfg.threads, [&](std::size_t i) {
    const auto& q = queries[i];
    results[i] = retrieve(index, table, corpus.docs, q.eq, q.vec, q.tokens, rp);
  });
  json arr = json::array();
  for (const auto& r : results) {
    ctx.log->debug("query {}: {} kept", r.query_id, r.kept.size());
    arr.push_back(formats::to_json(r));
  }
  emit(out, {{"config", config_json(ctx.cfg)}, {"results", arr}});
  return kExitOk;
}

int cmd_coverage(const Context& ctx, const RetrievalInputs& in, const std::vector<std::string>& batch_paths,
                 std::ostream& out) {
  Corpus corpus{load_vectors(in.word_vectors), {}};
  std::vector<std::vector<Passage>> batches;
  std::vector<Passage> all;
  for (const auto& path : batch_paths) {
    batches.push_back(formats::read_passages(path));
    all.insert(all.end(), batches.back().begin(), batches.back().end());
  }
  add_token_docs(ctx, corpus, all);
  const VectorStore store = passage_store(corpus, all, in.passage_vectors);
  const auto queries = prepare_queries(corpus, load_expanded(ctx, in), in.query_vectors);
  warn_retrieval_setup(ctx, queries);
  const auto rep = coverage_loop(queries, batches, store, corpus.docs, ctx.cfg.retrieval(), ctx.cfg.sitq());
  if (!rep.complete) {
    ctx.log->warn("stream exhausted with {} of {} queries uncovered", rep.total_queries - rep.queries_covered,
                  rep.total_queries);
  }
  emit(out, {{"config", config_json(ctx.cfg)}, {"coverage", formats::to_json(rep)}});
  return kExitOk;
}

std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t k = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), k);
    if (ec != std::errc() || ptr != part.data() + part.size() || k == 0) {
      throw UsageError("--ks must be a comma-separated list of positive integers");
    }
    ks.push_back(k);
  }
  if (ks.empty()) throw UsageError("--ks is empty");
  return ks;
}

int cmd_eval_retriever(const Context& ctx, const std::string& results_path, const std::string& relevance_path,
                       const std::string& gt_path, const std::string& gen_path, const std::string& ks,
                       std::ostream& out) {
  const auto results = formats::read_results(results_path);
  std::unordered_map<std::string, Relevance> rel;
  if (!relevance_path.empty()) {
    if (!gt_path.empty() || !gen_path.empty()) throw UsageError("give --relevance or question vectors, not both");
    rel = formats::read_relevance(relevance_path);
  } else {
    if (gt_path.empty() || gen_path.empty()) {
      throw UsageError("need --relevance, or --gt-questions with --gen-questions");
    }
    const auto gt = formats::read_labeled_vectors(gt_path);
    const auto gen = formats::read_labeled_vectors(gen_path);
    rel = relevance_from_cosine(gt, gen, ctx.cfg.cosine_relevance);
  }
  const auto cutoffs = parse_ks(ks);
  const auto ev = eval_retriever(results, rel, cutoffs, ctx.cfg.top_k);
  emit(out, formats::to_json(ev));
  return kExitOk;
}

// One-hot embeddings over the batch vocabulary: soft_match then reduces to
// the weighted share of tokens that also occur in the other question.
VectorStore one_hot_vocabulary(const std::vector<formats::LossRecord>& records) {
  std::vector<std::string> vocab;
  for (const auto& r : records) {
    vocab.insert(vocab.end(), r.generated.begin(), r.generated.end());
    vocab.insert(vocab.end(), r.reference.begin(), r.reference.end());
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  std::vector<float> m(vocab.size() * vocab.size(), 0.0f);
  for (std::size_t i = 0; i < vocab.size(); ++i) m[i * vocab.size() + i] = 1.0f;
  const std::size_t dim = vocab.size();
  return VectorStore(dim, std::move(vocab), std::move(m));
}

int cmd_score_losses(const Context& ctx, const std::string& batch_path, const std::string& vectors,
                     std::optional<double> prev_loss, std::optional<double> prob_floor, std::ostream& out) {
  const auto records = formats::read_loss_records(batch_path);
  if (records.empty()) throw DataError("no records in " + batch_path);
  const VectorStore words = vectors.empty() ? one_hot_vocabulary(records) : load_vectors(vectors);

  LossBatch batch;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    QuestionPair p;
    p.generated = r.generated;
    p.reference = r.reference;
    p.generated_doc = build_token_doc("generated#" + std::to_string(i + 1), r.generated, words);
    p.reference_doc = build_token_doc("reference#" + std::to_string(i + 1), r.reference, words);
    p.gen_prob = r.gen_prob;
    batch.pairs.push_back(std::move(p));
    if (i + 1 < records.size()) {
      if (!r.entail_label) {
        throw DataError(batch_path + ": record " + std::to_string(i + 1) + " needs entail_label and entail_prob");
      }
      batch.entailments.push_back({*r.entail_label, *r.entail_prob});
    } else if (r.entail_label) {
      ctx.log->warn("entailment fields on the last record have no following question; ignored");
    }
  }

  RewardConfig cfg = ctx.cfg.reward();
  cfg.prob_floor = prob_floor;
  const auto terms = loss_terms(batch, cfg);
  const double ce = ce_loss(terms, cfg);
  const double rce = rce_loss(terms);

  json steps = json::array();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    steps.push_back({{"step", i + 1},
                     {"reward", terms[i].reward},
                     {"indicator", terms[i].indicator},
                     {"gen_prob", terms[i].gen_prob}});
  }
  json erl = json::array();
  double batch_loss = ce;
  if (!batch.entailments.empty()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.entailments.size(); ++i) {
      const auto& e = batch.entailments[i];
      const double loss = erl_step_loss(batch, i, cfg);
      sum += loss;
      erl.push_back({{"step", i + 1},
                     {"label", std::string(to_string(e.label))},
                     {"prob", e.prob},
                     {"branch", takes_entailment_branch(e) ? "ce" : "rce"},
                     {"loss", loss}});
    }
    batch_loss = sum / static_cast<double>(batch.entailments.size());
  }
  json report = {{"alpha", cfg.alpha()}, {"gamma", cfg.gamma()}, {"pairs", terms.size()}, {"steps", steps},
                 {"ce", ce},           {"rce", rce},           {"erl", erl},            {"batch_loss", batch_loss}};
  if (prev_loss) report["ema"] = ema_update(*prev_loss, batch_loss, cfg);
  emit(out, report);
  return kExitOk;
}

int cmd_evaluate(const std::string& sr_path, const std::string& lc_path, const std::string& mode,
                 std::ostream& out) {
  if (sr_path.empty() && lc_path.empty()) throw UsageError("need --sr and/or --lc");
  if (mode != "cross" && mode != "consecutive" && mode != "all") {
    throw UsageError("--lc-mode must be cross, consecutive or all");
  }
  std::vector<ScoredPair> scores;
  if (!sr_path.empty()) {
    for (const auto& r : formats::read_pair_scores(sr_path)) scores.push_back({r.query_id, r.score});
  }
  std::vector<LabeledPair> labels;
  if (!lc_path.empty()) {
    for (const auto& r : formats::read_labels(lc_path)) {
      const bool consecutive = r.pair == formats::PairKind::kConsecutive;
      if (mode == "all" || (mode == "consecutive") == consecutive) labels.push_back({r.query_id, r.label});
    }
  }
  json report = formats::to_json(build_metric_report(scores, labels));
  report["lc_mode"] = mode;
  emit(out, report);
  return kExitOk;
}

int cmd_wmd(const std::string& a_path, const std::string& b_path, const std::string& vectors, bool relaxed,
            std::ostream& out) {
  const VectorStore words = load_vectors(vectors);
  auto docs = [&](const std::string& path) {
    std::vector<TokenDoc> out_docs;
    for (const auto& r : formats::read_token_records(path)) {
      out_docs.push_back(build_token_doc(r.id, r.tokens, words));
    }
    if (out_docs.empty()) throw DataError("no documents in " + path);
    return out_docs;
  };
  const auto a = docs(a_path);
  const auto b = docs(b_path);
  out << "id";
  for (const auto& d : b) out << ',' << d.doc_id;
  out << '\n';
  for (const auto& da : a) {
    out << da.doc_id;
    for (const auto& db : b) out << ',' << format_double(relaxed ? wmd_relaxed(da, db) : wmd_exact(da, db));
    out << '\n';
  }
  return kExitOk;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto log = std::make_shared<spdlog::logger>("iseeq", sink);
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("ISEEQ_LOG");
  const std::string level = env ? env : "info";
  log->set_level(spdlog::level::from_str(level));
  return log;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);

  CLI::App app{"iseeq: knowledge-aware query expansion, passage retrieval and question-generation scoring"};
  app.name("iseeq");
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file (flags override it)");
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flag_opts;
  for (const auto& f : config_flags()) {
    flag_opts.emplace_back(f.key, app.add_option(f.flag, flag_values[f.key], f.help));
  }

  std::string kg_format = "tsv";
  bool lenient = false;

  auto* kg = app.add_subcommand("kg", "knowledge-graph utilities");
  kg->require_subcommand(1);
  auto* kg_stats = kg->add_subcommand("stats", "print entity and triple counts");
  std::string kg_path;
  kg_stats->add_option("path", kg_path, "KG file")->required();
  kg_stats->add_option("--kg-format", kg_format, "tsv or conceptnet")->capture_default_str();
  kg_stats->add_flag("--lenient", lenient, "skip malformed lines with a warning");

  auto* expand = app.add_subcommand("expand-query", "expand queries with KG triples (JSONL out)");
  std::string ex_kg, ex_queries, ex_phrases;
  expand->add_option("--kg", ex_kg, "KG file")->required();
  expand->add_option("--kg-format", kg_format, "tsv or conceptnet")->capture_default_str();
  expand->add_option("--queries", ex_queries, "queries JSONL {id, text, kind}")->required();
  expand->add_option("--phrases", ex_phrases, "external noun phrases JSONL {id, phrases}");

  auto* build = app.add_subcommand("build-index", "build and save a SITQ index");
  std::string bi_vectors, bi_out;
  build->add_option("--vectors", bi_vectors, "passage vectors (JSONL or binary)")->required();
  build->add_option("--out", bi_out, "index file to write")->required();

  auto* retr = app.add_subcommand("retrieve", "SITQ candidates, WMD scoring and NES filtering");
  RetrievalInputs retr_in;
  std::string retr_passages, retr_index;
  add_retrieval_options(retr, retr_in);
  retr->add_option("--passages", retr_passages, "passages JSONL {id, text}")->required();
  retr->add_option("--index", retr_index, "prebuilt index over --passage-vectors");

  auto* cov = app.add_subcommand("coverage", "grow the corpus batch by batch until every query is covered");
  RetrievalInputs cov_in;
  std::vector<std::string> cov_batches;
  add_retrieval_options(cov, cov_in);
  cov->add_option("--batches", cov_batches, "passage batch files in stream order")->required();

  auto* ev = app.add_subcommand("eval-retriever", "hit rate and MAP over retrieve output");
  std::string ev_results, ev_rel, ev_gt, ev_gen, ev_ks = "10,20";
  ev->add_option("--results", ev_results, "retrieve output")->required();
  ev->add_option("--relevance", ev_rel, "relevance JSONL {query_id, relevant, gt_questions}");
  ev->add_option("--gt-questions", ev_gt, "ground-truth question vectors {id: query id, vec}");
  ev->add_option("--gen-questions", ev_gen, "generated question vectors {id: passage id, vec}");
  ev->add_option("--ks", ev_ks, "hit-rate cutoffs")->capture_default_str();

  auto* wmd = app.add_subcommand("wmd", "pairwise word mover's distance as CSV");
  std::string wmd_a, wmd_b, wmd_vectors;
  bool wmd_relaxed_flag = false;
  wmd->add_option("--docs-a", wmd_a, "documents JSONL {id, tokens} or {id, text}")->required();
  wmd->add_option("--docs-b", wmd_b, "documents JSONL {id, tokens} or {id, text}")->required();
  wmd->add_option("--word-vectors", wmd_vectors, "token embeddings")->required();
  wmd->add_flag("--relaxed", wmd_relaxed_flag, "print the relaxed lower bound instead");

  auto* losses = app.add_subcommand("score-losses", "reward, CE, RCE, ERL and EMA values for a batch");
  std::string ls_batch, ls_vectors;
  std::optional<double> ls_prev, ls_floor;
  losses->add_option("--batch", ls_batch, "batch JSONL")->required();
  losses->add_option("--word-vectors", ls_vectors, "token embeddings for soft matching (default: one-hot)");
  losses->add_option("--prev-loss", ls_prev, "previous epoch loss; adds the EMA value");
  losses->add_option("--prob-floor", ls_floor, "raise generation probabilities to this floor");

  auto* eval = app.add_subcommand("evaluate", "SR and LC metrics from pair scores and labels");
  std::string eval_sr, eval_lc, eval_mode = "cross";
  eval->add_option("--sr", eval_sr, "pair-score JSONL {gen_id, ref_id, score}");
  eval->add_option("--lc", eval_lc, "label JSONL {gen_id, ref_id, label, pair}");
  eval->add_option("--lc-mode", eval_mode, "cross, consecutive or all")->capture_default_str();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("iseeq");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  Context ctx;
  ctx.log = log;
  std::optional<std::string> file_text;
  try {
    if (!config_path.empty()) file_text = read_file(config_path);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& [key, opt] : flag_opts) {
      if (opt->count() > 0) overrides.emplace_back(key, flag_values[key]);
    }
    ctx.cfg = resolve_config(file_text, overrides, config_path.empty() ? "config" : config_path);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (kg->parsed()) return cmd_kg_stats(ctx, kg_path, kg_format, lenient, out);
    if (expand->parsed()) return cmd_expand(ctx, ex_kg, kg_format, ex_queries, ex_phrases, out);
    if (build->parsed()) return cmd_build_index(ctx, bi_vectors, bi_out, out);
    if (retr->parsed()) return cmd_retrieve(ctx, retr_in, retr_passages, retr_index, out);
    if (cov->parsed()) return cmd_coverage(ctx, cov_in, cov_batches, out);
    if (ev->parsed()) return cmd_eval_retriever(ctx, ev_results, ev_rel, ev_gt, ev_gen, ev_ks, out);
    if (wmd->parsed()) return cmd_wmd(wmd_a, wmd_b, wmd_vectors, wmd_relaxed_flag, out);
    if (losses->parsed()) return cmd_score_losses(ctx, ls_batch, ls_vectors, ls_prev, ls_floor, out);
    if (eval->parsed()) return cmd_evaluate(eval_sr, eval_lc, eval_mode, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvariantError& e) {
    log->error("internal invariant violated: {}", e.what());
    return kExitInternal;
  } catch (const DataError& e) {
    log->error("{}", e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    // Bad shapes or values that arrive through input files.
    log->error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    log->error("internal error: {}", e.what());
    return kExitInternal;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace iseeq::cli
