#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <thread>

#include <httplib.h>

#include "helpers.hpp"

using namespace wmaudit;
using nlohmann::json;

namespace {

/// Local HTTP server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  httplib::Server svr;

  void start() {
    port_ = svr.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~LocalServer() {
    svr.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  int port_ = 0;
  std::thread thread_;
};

backend::HttpSettings fast(const std::string& endpoint) {
  backend::HttpSettings h;
  h.endpoint = endpoint;
  h.timeout_ms = 2000;
  h.retries = 1;
  h.backoff_ms = 1;
  return h;
}

MockGeometry two_clusters(double dispersion) {
  MockGeometry g{32, 99, {}, {}};
  g.clusters.push_back(Cluster{"a", CentroidSpec{CentroidSpec::Kind::axis, 0, {}}, dispersion});
  g.clusters.push_back(Cluster{"b", CentroidSpec{CentroidSpec::Kind::axis, 1, {}}, dispersion});
  g.assignments.push_back({"alpha", "a"});
  g.assignments.push_back({"alphabet soup", "b"});
  g.assignments.push_back({"beta", "b"});
  return g;
}

}  // namespace

// Mock embedder ---------------------------------------------------------------

TEST(MockEmbedder, DeterministicAcrossInstances) {
  MockEmbedder a(two_clusters(0.2)), b(two_clusters(0.2));
  auto x = a.embed_one(Modality::text, "alpha one");
  EXPECT_EQ(x, a.embed_one(Modality::text, "alpha one"));
  EXPECT_EQ(x, b.embed_one(Modality::text, "alpha one"));
  EXPECT_NE(x, a.embed_one(Modality::text, "alpha two"));
}

TEST(MockEmbedder, SeedChangesVectors) {
  MockGeometry g = two_clusters(0.2);
  MockEmbedder a(g);
  g.seed = 100;
  MockEmbedder b(g);
  EXPECT_NE(a.embed_one(Modality::text, "unrouted text"), b.embed_one(Modality::text, "unrouted text"));
}

TEST(MockEmbedder, OutputCountOrderAndFiniteness) {
  MockEmbedder m(two_clusters(0.5));
  EmbedRequest req{Modality::text, {"alpha", "beta", "gamma", "alpha"}};
  auto out = m.embed(req);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0], out[3]);
  for (const auto& v : out) {
    EXPECT_EQ(v.dim(), 32u);
    EXPECT_NEAR(v.norm(), 1.0, 1e-6);
    for (float x : v.values()) EXPECT_TRUE(std::isfinite(x));
  }
  EXPECT_WM_ERROR(m.embed(EmbedRequest{Modality::text, {}}), ErrorKind::invalid_input);
}

TEST(MockEmbedder, ZeroDispersionCoincidesWithCentroid) {
  MockEmbedder m(two_clusters(0.0));
  auto a1 = m.embed_one(Modality::text, "alpha 1");
  auto a2 = m.embed_one(Modality::image, "alpha-photo.png");
  auto b1 = m.embed_one(Modality::text, "beta 1");
  double same = cosine_similarity(a1, a2);
  EXPECT_NEAR(same, 1.0, 1e-6);
  EXPECT_GT(same, cosine_similarity(a1, b1));
}

TEST(MockEmbedder, LongestPrefixWins) {
  MockEmbedder m(two_clusters(0.0));
  EXPECT_EQ(m.route("alphabet soup today"), std::optional<std::string>("b"));
  EXPECT_EQ(m.route("alpha"), std::optional<std::string>("a"));
  EXPECT_EQ(m.route("gamma"), std::nullopt);
}

TEST(MockEmbedder, ImagesKeyedByFileName) {
  MockEmbedder m(two_clusters(0.1));
  EXPECT_EQ(m.embed_one(Modality::image, "/x/y/alpha.png"), m.embed_one(Modality::image, "elsewhere/alpha.png"));
}

TEST(MockEmbedder, InvalidGeometryRejected) {
  MockGeometry g = two_clusters(0.1);
  g.assignments.push_back({"x", "missing"});
  EXPECT_WM_ERROR(MockEmbedder{g}, ErrorKind::invalid_config);
  g = two_clusters(-0.1);
  EXPECT_WM_ERROR(MockEmbedder{g}, ErrorKind::invalid_config);
}

TEST(MockEmbedder, GeometryJsonRoundTrip) {
  MockGeometry g = two_clusters(0.25);
  MockGeometry back = geometry_from_json(to_json(g));
  EXPECT_EQ(MockEmbedder(g).embed_one(Modality::text, "beta q"), MockEmbedder(back).embed_one(Modality::text, "beta q"));
}

TEST(MockEmbedder, WatermarkNeverInNormalTopFive) {
  // Normal images and queries share topic clusters; the watermark sits in its
  // own cluster reached only by its trigger.
  MockGeometry g{64, 4, {}, {}};
  for (int c = 0; c < 5; ++c) {
    std::string name = "topic" + std::to_string(c);
    g.clusters.push_back(Cluster{name, CentroidSpec{CentroidSpec::Kind::axis, static_cast<std::size_t>(c), {}}, 0.4});
    g.assignments.push_back({name + ":", name});
  }
  auto spec = wmtest::acronym_spec("ugp", "UGP", "Unicorn Grammar Parser", 1, "ugp.png");
  g = audit::route_corpus(g, {spec}, 0.05);
  MockEmbedder m(g);
  KnowledgeBase kb(64);
  for (int i = 0; i < 100; ++i) {
    std::string id = "topic" + std::to_string(i % 5) + ":img" + std::to_string(i);
    kb.add(ImageRecord{id, id, m.embed_one(Modality::image, id), std::nullopt});
  }
  kb = inject_watermarks(kb, {spec}, m);
  EXPECT_EQ(rank_of("ugp", retrieve_top_k(kb, m.embed_one(Modality::text, spec.probes[0].full_text)), 5), 1);
  for (int q = 0; q < 10000; ++q) {
    std::string text = "topic" + std::to_string(q % 5) + ": ordinary question " + std::to_string(q);
    EXPECT_EQ(rank_of("ugp", retrieve_top_k(kb, m.embed_one(Modality::text, text)), 5), 10);
  }
}

// Remote embedder -----------------------------------------------------------------

TEST(RemoteEmbedder, EmbedsInBatchesAndPreservesOrder) {
  LocalServer s;
  std::vector<std::size_t> batch_sizes;
  s.svr.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body);
    json rows = json::array();
    for (const auto& in : body["inputs"]) rows.push_back({static_cast<double>(in.get<std::string>().size()), 1.0, 0.0});
    batch_sizes.push_back(body["inputs"].size());
    res.set_content(json{{"embeddings", rows}, {"dim", 3}, {"model", "tiny"}}.dump(), "application/json");
  });
  s.start();
  RemoteEmbedderConfig cfg;
  cfg.http = fast(s.endpoint());
  cfg.batch_size = 2;
  RemoteEmbedder e(cfg);
  auto out = e.embed(EmbedRequest{Modality::text, {"a", "bb", "ccc", "dddd", "eeeee"}});
  ASSERT_EQ(out.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_FLOAT_EQ(out[i][0], static_cast<float>(i + 1));
  EXPECT_EQ(batch_sizes, (std::vector<std::size_t>{2, 2, 1}));
  EXPECT_EQ(e.dim(), 3u);
  EXPECT_EQ(e.model(), "tiny");
}

TEST(RemoteEmbedder, HealthcheckMatchingDimIsOk) {
  LocalServer s;
  s.svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"model":"openai/clip-vit-large-patch14","dim":768})", "application/json");
  });
  s.start();
  RemoteEmbedderConfig cfg;
  cfg.http = fast(s.endpoint());
  cfg.expected_dim = 768;
  RemoteEmbedder e(cfg);
  HealthStatus h = e.healthcheck();
  EXPECT_TRUE(h.ok);
  EXPECT_EQ(h.dim, 768u);
  EXPECT_TRUE(h.warnings.empty());
}

TEST(RemoteEmbedder, HealthcheckDimMismatchIsInvalidConfig) {
  LocalServer s;
  s.svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"model":"other-model","dim":512})", "application/json");
  });
  s.start();
  RemoteEmbedderConfig cfg;
  cfg.http = fast(s.endpoint());
  cfg.expected_dim = 768;
  RemoteEmbedder e(cfg);
  EXPECT_WM_ERROR(e.healthcheck(), ErrorKind::invalid_config);
}

TEST(RemoteEmbedder, OtherModelWarns) {
  LocalServer s;
  s.svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"model":"other-model","dim":4})", "application/json");
  });
  s.start();
  RemoteEmbedderConfig cfg;
  cfg.http = fast(s.endpoint());
  RemoteEmbedder e(cfg);
  EXPECT_EQ(e.healthcheck().warnings.size(), 1u);
}

TEST(RemoteEmbedder, HealthcheckTimeoutNamesEndpoint) {
  LocalServer s;
  s.svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(R"({"model":"m","dim":4})", "application/json");
  });
  s.start();
  RemoteEmbedderConfig cfg;
  cfg.http = fast(s.endpoint());
  cfg.http.timeout_ms = 100;
  RemoteEmbedder e(cfg);
  try {
    e.healthcheck();
    ADD_FAILURE() << "expected a connectivity error";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::connectivity);
    EXPECT_NE(std::string(err.what()).find(s.endpoint()), std::string::npos) << err.what();
  }
}

TEST(RemoteEmbedder, UnreachableEndpointIsConnectivityError) {
  RemoteEmbedderConfig cfg;
  cfg.http = fast("http://127.0.0.1:1");
  RemoteEmbedder e(cfg);
  EXPECT_WM_ERROR(e.healthcheck(), ErrorKind::connectivity);
}

TEST(RemoteEmbedder, TransportFailureIsRetryableBackendError) {
  RemoteEmbedderConfig cfg;
  cfg.http = fast("http://127.0.0.1:1");
  RemoteEmbedder e(cfg);
  try {
    e.embed_one(Modality::text, "x");
    ADD_FAILURE() << "expected a backend error";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::backend);
    EXPECT_TRUE(err.retryable());
  }
}

TEST(RemoteEmbedder, RetriesTransientStatusThenSucceeds) {
  LocalServer s;
  int calls = 0;
  s.svr.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls == 1) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    res.set_content(R"({"embeddings":[[1,0]],"dim":2,"model":"m"})", "application/json");
  });
  s.start();
  RemoteEmbedderConfig cfg;
  cfg.http = fast(s.endpoint());
  RemoteEmbedder e(cfg);
  EXPECT_EQ(e.embed_one(Modality::text, "x").dim(), 2u);
  EXPECT_EQ(calls, 2);
}

TEST(RemoteEmbedder, ClientErrorCapturesBody) {
  LocalServer s;
  s.svr.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad modality", "text/plain");
  });
  s.start();
  RemoteEmbedderConfig cfg;
  cfg.http = fast(s.endpoint());
  RemoteEmbedder e(cfg);
  std::string msg = wmtest::error_message([&] { e.embed_one(Modality::text, "x"); });
  EXPECT_NE(msg.find("bad modality"), std::string::npos) << msg;
}

TEST(RemoteEmbedder, DimDisagreementIsInvalidConfig) {
  LocalServer s;
  s.svr.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"embeddings":[[1,0,0]],"dim":3,"model":"m"})", "application/json");
  });
  s.start();
  RemoteEmbedderConfig cfg;
  cfg.http = fast(s.endpoint());
  cfg.expected_dim = 4;
  RemoteEmbedder e(cfg);
  EXPECT_WM_ERROR(e.embed_one(Modality::text, "x"), ErrorKind::invalid_config);
}

// Scripted generator ----------------------------------------------------------------

namespace {

struct Fixture {
  WatermarkSpec spec = wmtest::acronym_spec("ugp", "UGP", "Unicorn Grammar Parser", 1, "wm/ugp.png");
  KnowledgeBase kb{2};

  Fixture() {
    kb.add(ImageRecord{"n1", "img/n1.png", wmtest::vec({0, 1}), std::nullopt});
    kb.add(ImageRecord{"ugp", spec.asset_ref, wmtest::vec({1, 0}), std::string("ugp")});
  }

  ScriptedGenerator generator(double p, std::uint64_t seed = 1, bool requires_match = true) const {
    ScriptedRule r{"ugp", p, "It stands for {signature}.", requires_match};
    return ScriptedGenerator(ScriptedConfig{seed, {r}, std::string(kNeutralResponse)}, build_catalog(kb, {spec}));
  }

  GenerationRequest probe(std::uint64_t key, bool with_watermark = true) const {
    GenerationRequest r;
    r.query_text = spec.probes[0].full_text;
    r.image_refs = {"img/n1.png"};
    if (with_watermark) r.image_refs.push_back(spec.asset_ref);
    r.trial_key = key;
    return r;
  }
};

}  // namespace

TEST(ScriptedGenerator, CertainEmissionContainsSignature) {
  Fixture f;
  auto g = f.generator(1.0);
  EXPECT_NE(g.generate(f.probe(0)).find("Unicorn Grammar Parser"), std::string::npos);
}

TEST(ScriptedGenerator, ZeroProbabilityNeverEmits) {
  Fixture f;
  auto g = f.generator(0.0);
  for (std::uint64_t k = 0; k < 2000; ++k) EXPECT_EQ(eval_match(g.generate(f.probe(k)), f.spec.signature), 0);
}

TEST(ScriptedGenerator, EmissionRateMatchesBernoulli) {
  Fixture f;
  auto g = f.generator(0.6, 2024);
  int hits = 0;
  for (std::uint64_t k = 0; k < 10000; ++k) hits += eval_match(g.generate(f.probe(k)), f.spec.signature);
  double rate = hits / 10000.0;
  EXPECT_NEAR(rate, 0.6, 0.02);
  // Independent seeded Bernoulli stream of the same length.
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution coin(0.6);
  int oracle = 0;
  for (int i = 0; i < 10000; ++i) oracle += coin(rng) ? 1 : 0;
  EXPECT_NEAR(rate, oracle / 10000.0, 0.03);
}

TEST(ScriptedGenerator, NeverEmitsWithoutWatermarkImage) {
  Fixture f;
  auto g = f.generator(1.0);
  for (std::uint64_t k = 0; k < 200; ++k) {
    EXPECT_EQ(g.generate(f.probe(k, false)), std::string(kNeutralResponse));
  }
}

TEST(ScriptedGenerator, ProbeMatchRequirement) {
  Fixture f;
  auto strict = f.generator(1.0, 1, true);
  auto loose = f.generator(1.0, 1, false);
  GenerationRequest r = f.probe(0);
  r.query_text = "Describe the pictures.";
  EXPECT_EQ(strict.generate(r), std::string(kNeutralResponse));
  EXPECT_NE(loose.generate(r).find("Unicorn Grammar Parser"), std::string::npos);
  // Instruction matching ignores case and whitespace.
  r.query_text = "whatis the FULL name of   ugp?";
  EXPECT_NE(strict.generate(r).find("Unicorn Grammar Parser"), std::string::npos);
}

TEST(ScriptedGenerator, NoRuleNoDefaultIsInvalidConfig) {
  EXPECT_WM_ERROR(ScriptedGenerator(ScriptedConfig{1, {}, std::nullopt}, {}), ErrorKind::invalid_config);
  Fixture f;
  ScriptedGenerator g(ScriptedConfig{1, {ScriptedRule{"other", 1.0}}, std::nullopt}, build_catalog(f.kb, {f.spec}));
  EXPECT_WM_ERROR(g.generate(f.probe(0)), ErrorKind::invalid_config);
}

TEST(ScriptedGenerator, RejectsBadProbability) {
  EXPECT_WM_ERROR(ScriptedGenerator(ScriptedConfig{1, {ScriptedRule{"*", 1.5}}, std::nullopt}, {}),
                  ErrorKind::invalid_config);
}

TEST(ScriptedGenerator, ReproducibleFromSeed) {
  Fixture f;
  auto a = f.generator(0.5, 77), b = f.generator(0.5, 77), c = f.generator(0.5, 78);
  int differ = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    EXPECT_EQ(a.generate(f.probe(k)), b.generate(f.probe(k)));
    differ += a.generate(f.probe(k)) != c.generate(f.probe(k));
  }
  EXPECT_GT(differ, 0);
}

TEST(GenerateBatch, EmptyBatchIsEmpty) {
  Fixture f;
  auto g = f.generator(0.5);
  EXPECT_TRUE(g.generate_batch({}).empty());
}

TEST(GenerateBatch, SingleMatchesGenerate) {
  Fixture f;
  auto g = f.generator(0.5, 9);
  for (std::uint64_t k = 0; k < 20; ++k) {
    std::vector<GenerationRequest> one{f.probe(k)};
    auto out = g.generate_batch(one);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(*out[0].text, g.generate(f.probe(k)));
  }
}

TEST(GenerateBatch, ShuffleKeepsPairs) {
  Fixture f;
  auto g = f.generator(0.5, 10);
  std::vector<GenerationRequest> reqs;
  for (std::uint64_t k = 0; k < 100; ++k) reqs.push_back(f.probe(k));
  auto base = g.generate_batch(reqs);
  std::vector<std::size_t> perm(reqs.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));
  std::vector<GenerationRequest> shuffled;
  for (auto i : perm) shuffled.push_back(reqs[i]);
  auto out = g.generate_batch(shuffled);
  for (std::size_t j = 0; j < perm.size(); ++j) EXPECT_EQ(*out[j].text, *base[perm[j]].text);
}

TEST(GenerateBatch, FailuresReportedPerIndex) {
  CallbackGenerator g([](const GenerationRequest& r) -> std::string {
    if (r.trial_key % 3 == 1) fail(ErrorKind::backend, "flaky " + std::to_string(r.trial_key));
    return "ok " + std::to_string(r.trial_key);
  });
  std::vector<GenerationRequest> reqs(6);
  for (std::uint64_t k = 0; k < 6; ++k) reqs[k].trial_key = k;
  auto out = g.generate_batch(reqs);
  ASSERT_EQ(out.size(), 6u);
  for (std::size_t k = 0; k < 6; ++k) {
    if (k % 3 == 1) {
      EXPECT_FALSE(out[k].ok());
      EXPECT_NE(out[k].error->find("flaky " + std::to_string(k)), std::string::npos);
    } else {
      EXPECT_EQ(*out[k].text, "ok " + std::to_string(k));
    }
  }
}

TEST(Sampling, DefaultsAndValidation) {
  SamplingParams p;
  EXPECT_DOUBLE_EQ(p.temperature, 1.2);
  EXPECT_EQ(p.top_k, 5);
  EXPECT_DOUBLE_EQ(p.top_p, 0.9);
  p.top_p = 0.0;
  EXPECT_WM_ERROR(p.validate(), ErrorKind::invalid_input);
  p = {};
  p.temperature = 0.0;
  EXPECT_WM_ERROR(p.validate(), ErrorKind::invalid_input);
}

// Remote generator ------------------------------------------------------------------

TEST(RemoteGenerator, NativeForwardsSamplingAndReturnsVerbatim) {
  LocalServer s;
  json seen;
  s.svr.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(json{{"text", "  Verbatim Answer\n"}}.dump(), "application/json");
  });
  s.start();
  RemoteGeneratorConfig cfg;
  cfg.http = fast(s.endpoint());
  cfg.image_mode = ImagePayloadMode::path;
  RemoteGenerator g(cfg);
  GenerationRequest r;
  r.query_text = "q";
  r.image_refs = {"/srv/a.png", "/srv/b.png"};
  EXPECT_EQ(g.generate(r), "  Verbatim Answer\n");
  EXPECT_DOUBLE_EQ(seen["temperature"].get<double>(), 1.2);
  EXPECT_EQ(seen["top_k"].get<int>(), 5);
  EXPECT_DOUBLE_EQ(seen["top_p"].get<double>(), 0.9);
  EXPECT_EQ(seen["images"], (json{"/srv/a.png", "/srv/b.png"}));
}

TEST(RemoteGenerator, Base64ImagesFromFiles) {
  wmtest::TempDir dir;
  wmtest::spit(dir / "a.bin", "hello");
  RemoteGeneratorConfig cfg;
  cfg.http = fast("http://127.0.0.1:1");
  RemoteGenerator g(cfg);
  GenerationRequest r;
  r.query_text = "q";
  r.image_refs = {(dir / "a.bin").string()};
  EXPECT_EQ(g.native_body(r)["images"][0], "aGVsbG8=");
}

TEST(RemoteGenerator, ChatProfile) {
  LocalServer s;
  json seen;
  s.svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Apple"}}]})", "application/json");
  });
  s.start();
  RemoteGeneratorConfig cfg;
  cfg.http = fast(s.endpoint());
  cfg.profile = GenerationProfile::chat;
  cfg.image_mode = ImagePayloadMode::path;
  cfg.user_template = "{num_images} images. {query}";
  RemoteGenerator g(cfg);
  GenerationRequest r;
  r.query_text = "What fruit?";
  r.image_refs = {"a.png"};
  EXPECT_EQ(g.generate(r), "Apple");
  const auto& user = seen["messages"][1]["content"];
  EXPECT_EQ(user[0]["text"], "1 images. What fruit?");
  EXPECT_EQ(user[1]["image_url"]["url"], "a.png");
}

TEST(RemoteGenerator, ServerErrorIsBackendError) {
  LocalServer s;
  s.svr.Post("/generate", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("overloaded", "text/plain");
  });
  s.start();
  RemoteGeneratorConfig cfg;
  cfg.http = fast(s.endpoint());
  RemoteGenerator g(cfg);
  GenerationRequest r;
  r.query_text = "q";
  EXPECT_WM_ERROR(g.generate(r), ErrorKind::backend);
}

TEST(RemoteGenerator, UnknownProfileRejected) { EXPECT_WM_ERROR(parse_profile("grpc"), ErrorKind::invalid_config); }
