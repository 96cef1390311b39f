// Builds a small knowledge base in memory, injects one acronym watermark,
// probes it through a scripted generator and runs the deployment test.

#include <iostream>

#include "wmaudit.hpp"

int main() {
  using namespace wmaudit;

  MockGeometry geo;
  geo.dim = 32;
  geo.seed = 11;
  geo.clusters = {{"city", {}, 0.3}, {"watermark", {}, 0.05}};
  geo.assignments = {{"city", "city"}, {"ugp", "watermark"}, {"What's the meaning of UGP", "watermark"}};
  MockEmbedder embedder(geo);

  KnowledgeBase kb(geo.dim);
  for (int i = 0; i < 8; ++i) {
    std::string name = "city_" + std::to_string(i) + ".png";
    kb.add({"city_" + std::to_string(i), name, embedder.embed_one(Modality::image, name), std::nullopt});
  }

  WatermarkSpec spec;
  spec.id = "ugp";
  spec.method = WatermarkMethod::acronym;
  spec.signature = "Unicorn Grammar Parser";
  spec.acronym = "UGP";
  spec.asset_ref = "ugp.png";
  spec.probes = {make_probe("What's the meaning of UGP?", "Answer based on the images.")};
  std::vector<WatermarkSpec> specs{spec};
  kb = inject_watermarks(kb, specs, embedder);

  ScriptedGenerator vlm({2024, {ScriptedRule{"*", 0.8}}}, build_catalog(kb, specs));

  std::vector<double> bits;
  for (std::uint64_t q = 0; q < 20; ++q) {
    const ProbeQuery& probe = spec.probes.front();
    RetrievalResult hits = retrieve_top_k(kb, embedder.embed_one(Modality::text, probe.full_text));
    GenerationRequest req{probe.full_text, {}, {}, q};
    for (const auto& e : hits.entries) req.image_refs.push_back(kb.find(e.id)->asset_ref);
    bits.push_back(eval_match(vlm.generate(req), spec.signature) ? 1.0 : 0.0);
    if (q == 0) std::cout << "rank of watermark: " << rank_of(spec.id, hits, hits.k) << "\n";
  }

  stats::DeploymentResult d =
      stats::deployment_test(stats::summarize(bits), stats::acronym_preset(), 3e-5, WatermarkMethod::acronym);
  std::cout << "suspect mean " << stats::summarize(bits).mean << ", p(clean) " << d.p_clean << ", decision "
            << stats::to_string(d.decision) << "\n";
}
