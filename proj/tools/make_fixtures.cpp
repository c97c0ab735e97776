// Copyright 2026 The CARTIER Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Regenerates data/bundled: the seed-7 synthetic dataset, the hand-written
// conversational query set, the recorded LLM responses that replay mode
// serves, and the frozen expected report the acceptance suite compares
// against. Run from the repository root:
//
//   ./build/tools/cartier_fixture_gen [data/bundled]

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "cartier/evaluation.hpp"
#include "cartier/synthetic.hpp"

namespace fs = std::filesystem;
using namespace cartier;

namespace {

// One conversational utterance per household label: several sentences,
// the need implied rather than named, plus distracting content.
const std::map<std::string, std::string>& conversational_texts() {
  static const std::map<std::string, std::string> kTexts = {
      {"bed",
       "What a day. The meeting ran three hours over and my eyes keep closing on their own. "
       "I was going to call my sister tonight but honestly I can barely stand. I think I just "
       "need to lie down until morning."},
      {"sofa",
       "My cousins are staying over this weekend and we want to watch the game together. "
       "Standing around the kitchen got old fast. Somewhere comfortable for three people to "
       "sit would be perfect."},
      {"armchair",
       "I finally got that novel everyone keeps recommending. The kitchen stools hurt my back "
       "after ten minutes. I want one cozy spot to curl up alone and read a few chapters."},
      {"office chair",
       "My video calls start in five minutes and my back is already complaining. The dining "
       "bench is way too low for the desk. I need to sit properly while I work through the "
       "afternoon."},
      {"desk",
       "Taxes are due next week and the paperwork is everywhere. The couch cushions keep "
       "swallowing my pens. I need a flat surface where I can spread the forms and actually "
       "write."},
      {"dining table",
       "The whole family is coming for dinner on Sunday, seven of us in total. Grandma "
       "insists on a proper sit-down meal, none of that plates-on-knees business. Where "
       "should we eat?"},
      {"coffee table",
       "Friends are dropping by for tea and cake in an hour. The floor is no place for cups "
       "and saucers. Something low in the living room to set everything on would be ideal."},
      {"bookshelf",
       "I just finished the trilogy and the books are stacked on the floor like a tiny tower. "
       "My partner keeps tripping over them. They should go where the rest of the collection "
       "lives."},
      {"wardrobe",
       "The dry cleaning came back and the jackets are draped over every chair. Winter coats, "
       "summer shirts, all mixed up. Everything needs to be hung up where clothes belong."},
      {"dresser",
       "All my folded laundry is sitting in the basket from Tuesday. Socks, shirts, the "
       "works. It should all go into drawers before the cat makes a nest in it."},
      {"nightstand",
       "I keep losing my reading glasses and my phone charger right before bed. There should "
       "be a little spot right next to where I sleep where those things live."},
      {"floor lamp",
       "The evenings are getting darker earlier now. The ceiling light is too harsh for "
       "reading and the corner by my reading spot is pitch black. Some soft standing light "
       "over there would help."},
      {"mirror",
       "I have a job interview in forty minutes. New tie, new shirt, and absolutely no idea "
       "whether the collar sits right. I need to check how I look before I leave."},
      {"television",
       "The finale airs tonight at nine and everyone at work has been talking about it. I "
       "made popcorn already. Where do I go to watch it?"},
      {"laptop",
       "The quarterly report needs two more paragraphs and my boss wants it by six. I can "
       "type fast when I get going. I just need my machine with the files on it."},
      {"keyboard",
       "My wrists ache from tapping on that flat tablet screen all morning. Real keys make "
       "all the difference for long emails. Where is the thing with actual keys?"},
      {"monitor",
       "Editing photos on a thirteen inch screen is hopeless, all the detail gets lost. The "
       "big screen on the desk shows the colors properly. I should plug in over there."},
      {"printer",
       "The airline says I need a paper copy of the boarding pass, can you believe that, in "
       "this day and age. The PDF is ready on my phone. I just need to get it onto paper."},
      {"telephone",
       "My aunt does not do video calls, she says the camera adds ten years. She is "
       "expecting my call at seven sharp. The old landline it is then."},
      {"wall clock",
       "My phone died an hour ago and the charger is in the car. I have a bus to catch "
       "sometime soon. I need to see what time it is."},
      {"painting",
       "The museum trip inspired me. My friend keeps asking about the piece we have hanging "
       "here, the one with the blues and the harbor. I want another long look at it."},
      {"potted plant",
       "The leaves looked droopy this morning and I forgot the watering schedule again. It "
       "has been a week, maybe more. The poor green thing needs attention."},
      {"vase",
       "These tulips from the market will not last long lying flat on the counter. They were "
       "expensive, too. They need water and something to stand in."},
      {"aquarium",
       "Feeding time was supposed to be an hour ago and the flakes are right here in my "
       "hand. The little guys are probably circling by the glass already. Where do I go?"},
      {"pillow",
       "My neck has been stiff since that long flight. The doctor said to support my head "
       "better when I nap on my side. Something soft to put under my head would help."},
      {"blanket",
       "The radiator is acting up again and the repair visit is Thursday. My toes are "
       "freezing while I read. Something warm to wrap around myself would be lovely."},
      {"bathtub",
       "After that marathon my legs are screaming. A long hot soak with those mineral salts "
       "would fix everything. Where do I go for that?"},
      {"toilet",
       "Too much iced tea at lunch, way too much. The meeting ran long and then traffic. I "
       "need the obvious room, quickly please."},
      {"sink",
       "I have been chopping beets and my hands look like a crime scene. The towel is "
       "already ruined. I need running water to clean up."},
      {"towel rack",
       "Fresh out of the shower and dripping everywhere, the bath mat is soaked. The fluffy "
       "blue one should be hanging in its usual spot. Where do the towels live?"},
      {"medicine cabinet",
       "This headache has been building since noon and the aspirin is not in my bag. We keep "
       "the pills behind the bathroom mirror, I think. Where should I look?"},
      {"refrigerator",
       "The farmers market haul is melting on the counter, the butter especially. Milk, "
       "cheese, berries, all of it needs to go somewhere cold right now."},
      {"oven",
       "The dough has risen twice and the recipe says forty minutes at two hundred degrees. "
       "The tray is greased and ready. Time to bake this bread."},
      {"microwave",
       "Lunch got interrupted and now my soup is stone cold. I only have five minutes "
       "between calls. The fastest way to hot soup wins."},
      {"toaster",
       "Saturday breakfast means crunchy bread with marmalade, it is tradition. The bag of "
       "sliced sourdough is right here. I just need the thing that browns it."},
      {"kettle",
       "My throat is scratchy and my grandmother swears by honey lemon tea. The mugs are "
       "clean for once. First step is boiling water."},
      {"coffee machine",
       "Three more chapters of edits are due before the morning standup. My eyelids weigh a "
       "ton already and it is barely ten. Something with caffeine has to happen or this "
       "deadline is lost."},
      {"dishwasher",
       "The dinner party was wonderful but the pile of plates is not. Twelve settings, pots, "
       "the lot. I am not scrubbing all that by hand."},
      {"cutting board",
       "These onions will not dice themselves and the countertop scratches easily, we "
       "learned that the hard way. The knife is sharp and ready. I need the right surface to "
       "chop on."},
      {"trash can",
       "The fish wrapper from dinner is starting to announce itself. The kitchen smells like "
       "a harbor at noon. This bag needs to go where garbage goes."},
  };
  return kTexts;
}

std::string scripted_response(const std::string& label, int i) {
  switch (i % 5) {
    case 0:
      return "To satisfy this request the robot ought to drive to the object named `" + label +
             "'.";
    case 1:
      return "The most helpful destination here is the " + label + ".";
    case 2:
      return "Given everything described, I would send the robot to the " + label + ".";
    case 3:
      return label;
    default:
      return "That sounds like a job for the " + label + ". The robot should go there.";
  }
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? argv[1] : "data/bundled";
  fs::create_directories(out);

  SyntheticConfig config;
  config.seed = 7;
  config.object_count = 10;
  config.waypoint_count = 20;
  const SyntheticScene scene = generate_synthetic(config);

  save_trajectory(scene.trajectory, out / "trajectory");
  save_scene_truth(scene.truth, out / "scene.json");
  save_queries(scene.queries, out / "queries.json");

  std::printf("scene labels:");
  for (const SceneObject& obj : scene.truth.objects) {
    std::printf(" \"%s\"", obj.label.c_str());
  }
  std::printf("\n");

  // Conversational queries: one per placed object, plus one whose recorded
  // answer names a colocated object to exercise adjudication.
  std::vector<Query> conversational;
  std::vector<std::string> responses;
  for (std::size_t i = 0; i < scene.truth.objects.size(); ++i) {
    const std::string& label = scene.truth.objects[i].label;
    Query q;
    char id[32];
    std::snprintf(id, sizeof(id), "conv-%03zu", i);
    q.query_id = id;
    q.type = QueryType::Conversational;
    q.text = conversational_texts().at(label);
    q.plausible_labels = {label};
    conversational.push_back(std::move(q));
    responses.push_back(scripted_response(label, static_cast<int>(i)));
  }
  const std::string adjudicate_target = scene.truth.objects[0].label;
  const std::string adjudicate_answer = scene.truth.objects[1].label;
  {
    Query q;
    q.query_id = "conv-adjudicate";
    q.type = QueryType::Conversational;
    q.text = "The guests arrive within the hour and the lounge still looks half finished. "
             "Everyone will gather in that corner first, you know how it goes. Whatever "
             "anchors that spot needs attention now.";
    q.plausible_labels = {adjudicate_target};
    conversational.push_back(std::move(q));
    responses.push_back("I would direct the robot to the " + adjudicate_answer + ".");
  }
  save_queries(conversational, out / "queries_conversational.json");

  EquivalenceConfig eq;
  eq.synonym_groups = {{"trash can", "trash bin", "garbage can"}, {"television", "tv"}};
  eq.colocations = {
      {"faucet", "sink", EquivalenceConfig::ColocationStatus::Accept},
      {adjudicate_answer, adjudicate_target, EquivalenceConfig::ColocationStatus::Ambiguous},
  };
  eq.validate();
  eq.save(out / "equivalence.json");

  // Record the scripted responses under the prompts the pipeline really
  // builds, so replay mode serves them byte-exactly.
  const std::vector<std::string> vocabulary = detector_vocabulary(scene.trajectory);
  const PromptTemplate tmpl = default_prompt_template();
  fs::remove(out / "llm_cache.jsonl");
  ResponseCache cache(out / "llm_cache.jsonl");
  std::map<std::string, std::string> by_prompt;
  for (std::size_t i = 0; i < conversational.size(); ++i) {
    by_prompt[build_prompt(tmpl, vocabulary, conversational[i].text)] = responses[i];
  }
  MockBackend recorder("recorded-llm", [&](const std::string& prompt) {
    return by_prompt.at(prompt);
  });
  LlmParams params;
  params.model = "recorded-llm";
  for (const Query& q : conversational) {
    complete(recorder, build_prompt(tmpl, vocabulary, q.text), params, &cache,
             CompletionMode::Record, tmpl.template_id);
  }
  std::printf("recorded %zu responses\n", cache.size());

  // Freeze the replay-mode report over all three index variants.
  const ObjectIndex object_depth = build_object_depth(scene.trajectory);
  const ObjectIndex object_viewpoint = build_object_viewpoint(scene.trajectory, 0.8, true);
  const TestEmbedder embedder(32);
  const EmbeddingGrid grid = accumulate_grid(scene.trajectory, embedder, 0.1);
  auto replay_backend = MockBackend::unreachable("recorded-llm");

  EvaluationJob job;
  job.truth = &scene.truth;
  job.queries = &conversational;
  job.vocabulary = vocabulary;
  job.methods = {Method::Cartier};
  job.cartier_indices = {"object-depth", "object-viewpoint", "embedding-grid"};
  job.object_depth = &object_depth;
  job.object_viewpoint = &object_viewpoint;
  job.grid = &grid;
  job.embedder = &embedder;
  job.grounding.prompt_template = tmpl;
  job.grounding.backend = replay_backend.get();
  job.grounding.cache = &cache;
  job.grounding.mode = CompletionMode::Replay;
  job.grounding.params = params;
  job.equivalence = eq;

  const Report report = evaluate(job);
  write_report_csv(report, out / "expected_conversational.csv");
  write_report_markdown(report, out / "expected_conversational.md");

  int failed = 0;
  for (const PredictionRecord& r : report.records) {
    if (r.failed) ++failed;
  }
  std::printf("expected report: %zu records (%d failed) -> %s\n", report.records.size(), failed,
              (out / "expected_conversational.csv").c_str());
  return failed == 0 ? 0 : 1;
}
