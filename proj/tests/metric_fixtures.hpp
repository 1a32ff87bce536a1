#pragma once

#include <string>
#include <vector>

namespace oracle {

struct MetricFixture {
  std::vector<std::string> refs;
  std::vector<std::string> hyps;
};

// Plain ASCII, single-space separated, so the oracles' tokenisation applies.
inline std::vector<MetricFixture> fixtures() {
  return {
      {{"the cat sat on the mat"}, {"the cat on the mat"}},
      {{"the cat sat on the mat"}, {"the cat sat on the mat today"}},
      {{"a b c d e f"}, {"f e d c b a"}},
      {{"nuqa wasiyta risaq"}, {"nuqa wasiman risaq"}},
      {{"ukhamarac"}, {"ukhamarak"}},
      {{"one two three four", "five six seven"}, {"one two three", "five six seven eight"}},
      {{"x y z", "x y z x y z"}, {"x y", "x y z x"}},
      {{"jallalla uru", "kamisaki jilata", "waliki"}, {"jallalla", "kamisaki jilata waliki", "walikiw"}},
      {{"aa aa aa aa"}, {"aa aa aa aa aa aa"}},
      {{"mana allinchu kay", "allinmi"}, {"mana allinchu", "allin"}},
      {{"p q r s t u v w"}, {"p q r s t u v w"}},
      {{"el perro come", "la casa"}, {"perro el come", "casa la grande"}},
  };
}

}  // namespace oracle
