// Copyright 2026 The AAPR Authors.
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

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "aapr/error.hpp"
#include "aapr/latex.hpp"

using aapr::latex::parse_latex;
using aapr::latex::strip_comments;

TEST(StripComments, KeepsEscapedPercent) {
  EXPECT_EQ(strip_comments("a % gone\nb 50\\% kept % gone\n"), "a \nb 50\\% kept \n");
}

TEST(ParseLatex, TitleAndIntroduction) {
  auto p = parse_latex("\\title{A B}\\begin{document}\\section{Introduction} x y. \\end{document}");
  EXPECT_EQ(p.title, "A B");
  EXPECT_EQ(p.introduction, "x y.");
  EXPECT_TRUE(p.warnings.empty());
}

TEST(ParseLatex, AuthorsSplitOnAnd) {
  auto p = parse_latex("\\author{Ann \\and Bob}\\begin{document}\\end{document}");
  EXPECT_EQ(p.authors, (std::vector<std::string>{"Ann", "Bob"}));
}

TEST(ParseLatex, AuthorsSplitOnCommasAndLineBreaks) {
  auto p = parse_latex("\\author{Ann Lee, Bob Stone\\\\ Cy Dee}\\begin{document}\\end{document}");
  EXPECT_EQ(p.authors, (std::vector<std::string>{"Ann Lee", "Bob Stone", "Cy Dee"}));
}

TEST(ParseLatex, MissingDocumentIsMalformed) {
  EXPECT_THROW(parse_latex("\\section{Introduction} text"), aapr::MalformedSource);
}

TEST(ParseLatex, HeadingClassification) {
  auto p = parse_latex(
      "\\begin{document}"
      "\\section{Introduction} i."
      "\\section{Related Work} r."
      "\\section{Background} b."
      "\\section{Our Model} m."
      "\\section{Experiments} e."
      "\\section{Discussion} d."
      "\\section{Conclusions} c."
      "\\end{document}");
  EXPECT_EQ(p.introduction, "i.");
  EXPECT_EQ(p.related_work, "r. b.");
  EXPECT_EQ(p.methods, "m. e.");
  EXPECT_EQ(p.conclusion, "d. c.");
}

TEST(ParseLatex, AbstractEnvironmentAndCommand) {
  EXPECT_EQ(parse_latex("\\begin{document}\\begin{abstract} We x. \\end{abstract}\\end{document}").abstract,
            "We x.");
  EXPECT_EQ(parse_latex("\\begin{document}\\abstract{We y.}\\end{document}").abstract, "We y.");
}

TEST(ParseLatex, StripsMathCitationsAndFloats) {
  auto p = parse_latex(
      "\\begin{document}\\section{Method}"
      "A $x^2$ b $$y$$ c \\cite{k} d \\ref{f} e \\label{l}."
      "\\begin{equation} z = 1 \\end{equation}"
      "\\begin{figure} fig text \\end{figure}"
      "\\begin{align} a &= b \\end{align}"
      "F \\textbf{bold} \\emph{em}."
      "\\end{document}");
  EXPECT_EQ(p.methods, "A b c d e. F bold em.");
}

TEST(ParseLatex, DropsBibliographyAndAppendix) {
  auto p = parse_latex(
      "\\begin{document}\\section{Conclusion} done.\\appendix\\section{Proof} hidden."
      "\\end{document}");
  EXPECT_EQ(p.conclusion, "done.");
  EXPECT_EQ(p.methods, "");
  auto q = parse_latex("\\begin{document}\\section{Conclusion} done.\\bibliography{refs} \\end{document}");
  EXPECT_EQ(q.conclusion, "done.");
}

TEST(ParseLatex, UnclosedEnvironmentWarnsAndKeepsText) {
  auto p = parse_latex(
      "\\begin{document}\\section{Method} a.\\begin{itemize}\\item b.\\section{Conclusion} c.\\end{document}");
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_NE(p.warnings[0].find("itemize"), std::string::npos);
  EXPECT_EQ(p.methods, "a. b.");
  EXPECT_EQ(p.conclusion, "c.");
}

TEST(ParseLatex, CommentsNeverReachModules) {
  auto p = parse_latex(
      "\\title{T % secret\n}\\begin{document}\\section{Introduction} x % hidden\n y.\\end{document}");
  EXPECT_EQ(p.title, "T");
  EXPECT_EQ(p.introduction, "x y.");
}

TEST(ParseLatex, TextBeforeFirstSectionIsIntroduction) {
  auto p = parse_latex("\\begin{document} Opening words. \\section{Method} m.\\end{document}");
  EXPECT_EQ(p.introduction, "Opening words.");
}
