#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string_view>

#include <fmt/format.h>

#include "selfstate/corpus.hpp"

// Synthetic timelines built from a neutral phrase bank. Every evidence
// sentence has the shape "<Lead>, <fragment>." so a span can be planted either
// as the whole sentence (sentence-shaped) or as the fragment alone
// (lowercase start, no terminal punctuation).

namespace selfstate {
namespace {

struct Phrase {
  std::string_view lead;
  std::string_view fragment;
};

constexpr std::array kAdaptive{
    Phrase{"Yesterday I went for a long walk", "and it helped me feel calm again"},
    Phrase{"I called my sister after work", "and she listened to me for an hour"},
    Phrase{"After the meeting I asked a friend for help", "because I knew I could not fix it alone"},
    Phrase{"I made a proper dinner tonight", "which felt like a small act of self-care"},
    Phrase{"Today I rested", "and I am proud of that"},
    Phrase{"I told my partner how I felt", "and we talked it through calmly"},
    Phrase{"Nobody can be perfect", "so I am trying to go easier on myself"},
    Phrase{"I booked an appointment with a counselor", "because I want to feel better"},
    Phrase{"I finished the painting I started in spring", "and I felt content for once"},
    Phrase{"My neighbour invited me for coffee", "and I said yes this time"},
    Phrase{"I cried for a while in the evening", "and afterwards I felt lighter"},
    Phrase{"I wrote down three good things about today", "since it helps me keep perspective"},
    Phrase{"I went to the store on my own", "and it went fine"},
    Phrase{"I joined a support group online", "where people were kind to me"},
};

constexpr std::array kMaladaptive{
    Phrase{"I stayed in bed until the afternoon again", "because nothing seems worth the effort"},
    Phrase{"I keep replaying the argument in my head", "and I hate myself for what I said"},
    Phrase{"Everyone at work ignores me", "so I feel completely alone"},
    Phrase{"I skipped meals again this week", "and I do not care anymore"},
    Phrase{"I feel hopeless about the future", "and nothing I do changes anything"},
    Phrase{"The doctors keep changing my medication", "and doctors can't help me"},
    Phrase{"I cancelled plans with my friends again", "because I am tired of pretending"},
    Phrase{"I am worthless compared to everyone else", "and they would be better off without me"},
    Phrase{"I yelled at my brother over nothing", "and then I locked myself in my room"},
    Phrase{"My chest gets tight whenever my phone rings", "so I just let it ring"},
    Phrase{"I feel empty most days", "like I am watching my life from far away"},
    Phrase{"Nobody ever texts me back", "which proves that nobody cares"},
    Phrase{"I drank until I could not think", "because it is the only way I can sleep"},
    Phrase{"I keep failing at everything I try", "and I am ashamed of myself"},
};

constexpr std::array<std::string_view, 10> kFiller{
    "The weather was grey all week.",
    "I have a lot of work to finish before Friday.",
    "My cat slept on the couch most of the day.",
    "I saw Dr. Patel on Monday for a routine check.",
    "The bus was late again this morning.",
    "We are moving to a new flat next month.",
    "I watched a documentary about ocean currents.",
    "The library near me closes early on weekends.",
    "My phone screen cracked last Tuesday.",
    "There is construction outside my window.",
};

using Rng = std::mt19937_64;

// Modulo reduction keeps the draw sequence identical across standard
// library implementations (distributions are not portable).
std::size_t draw(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[draw(rng, i)]);
}

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t pool, std::size_t k) {
  std::vector<std::size_t> idx(pool);
  for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) {
    if (i % pool == 0) shuffle(idx, rng);
    out.push_back(idx[i % pool]);
  }
  return out;
}

// Marks exactly `planted` of `total` span slots as fragments.
std::vector<bool> fragment_plan(Rng& rng, std::size_t total, std::size_t planted) {
  std::vector<bool> plan(total, false);
  std::fill_n(plan.begin(), std::min(planted, total), true);
  shuffle(plan, rng);
  return plan;
}

struct PlannedSentence {
  std::string text;
  std::optional<Label> label;
  std::string evidence;
};

}  // namespace

std::size_t planned_non_sentence_spans(std::size_t total_spans, double fraction) {
  const double clamped = std::clamp(fraction, 0.0, 1.0);
  return static_cast<std::size_t>(std::llround(clamped * static_cast<double>(total_spans)));
}

std::vector<Timeline> generate_fixture(std::uint64_t seed, std::size_t n_timelines,
                                       std::size_t posts_per_timeline,
                                       const FixtureOptions& options) {
  Rng rng(seed);
  const std::size_t n_posts = n_timelines * posts_per_timeline;
  const std::size_t total_a = n_posts * options.adaptive_spans_per_post;
  const std::size_t total_m = n_posts * options.maladaptive_spans_per_post;
  const auto plan_a = fragment_plan(
      rng, total_a, planned_non_sentence_spans(total_a, options.non_sentence_fraction_adaptive));
  const auto plan_m = fragment_plan(
      rng, total_m,
      planned_non_sentence_spans(total_m, options.non_sentence_fraction_maladaptive));
  std::size_t next_a = 0;
  std::size_t next_m = 0;

  const std::size_t fill_lo = std::min(options.filler_sentences_min, options.filler_sentences_max);
  const std::size_t fill_hi = std::max(options.filler_sentences_min, options.filler_sentences_max);

  std::vector<Timeline> out;
  for (std::size_t t = 0; t < n_timelines; ++t) {
    Timeline timeline;
    timeline.timeline_id = fmt::format("fixture-{}-{:03}", seed, t);
    timeline.summary = fmt::format("Synthetic timeline {} of {} (seed {}).", t + 1, n_timelines, seed);

    for (std::size_t p = 0; p < posts_per_timeline; ++p) {
      std::vector<PlannedSentence> sentences;
      auto plant = [&](const auto& bank, Label label, std::size_t count,
                       const std::vector<bool>& plan, std::size_t& next) {
        for (std::size_t idx : sample_without_replacement(rng, bank.size(), count)) {
          const Phrase& ph = bank[idx];
          const bool comma_fragment = draw(rng, 3) == 0;
          PlannedSentence s;
          s.text = fmt::format("{}, {}.", ph.lead, ph.fragment);
          s.label = label;
          if (plan[next++]) {
            s.evidence = comma_fragment ? fmt::format(", {}", ph.fragment) : std::string(ph.fragment);
          } else {
            s.evidence = s.text;
          }
          sentences.push_back(std::move(s));
        }
      };
      plant(kAdaptive, Label::Adaptive, options.adaptive_spans_per_post, plan_a, next_a);
      plant(kMaladaptive, Label::Maladaptive, options.maladaptive_spans_per_post, plan_m, next_m);
      const std::size_t n_fill = fill_lo + draw(rng, fill_hi - fill_lo + 1);
      for (std::size_t idx : sample_without_replacement(rng, kFiller.size(), n_fill)) {
        sentences.push_back({std::string(kFiller[idx]), std::nullopt, {}});
      }
      shuffle(sentences, rng);

      Post post;
      post.post_id = fmt::format("{}-p{:02}", timeline.timeline_id, p);
      for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i > 0) post.text += (draw(rng, 4) == 0) ? "\n\n" : " ";
        post.text += sentences[i].text;
        if (sentences[i].label == Label::Adaptive) {
          post.adaptive_evidence.push_back(sentences[i].evidence);
        } else if (sentences[i].label == Label::Maladaptive) {
          post.maladaptive_evidence.push_back(sentences[i].evidence);
        }
      }
      post.summary = fmt::format("Synthetic post {} with {} sentences.", p + 1, sentences.size());
      const std::size_t score = draw(rng, 11);
      if (score < 10) post.wellbeing_score = static_cast<std::int64_t>(score + 1);
      timeline.posts.push_back(std::move(post));
    }
    out.push_back(std::move(timeline));
  }
  return out;
}

}  // namespace selfstate
