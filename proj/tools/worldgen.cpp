// Generates the bundled world fixtures, scripted oracle rule files and run
// configs, then verifies them: every task must be solvable by brute-force
// search within the horizon cap, and each task family must behave as designed
// under the scripted base policy (keyword tasks solve, wander tasks solve
// slowly, decoy tasks fail at execution, synonym tasks fail at navigation).
//
// The emitted files are frozen into assets/; regeneration is deterministic.

#include <CLI11.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "retrace/retrace.hpp"

namespace {

using nlohmann::ordered_json;
using namespace retrace;

std::string slug(std::string s) {
  for (char& c : s) {
    if (c == ' ') {
      c = '-';
    } else {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Site skeleton: 5 sections x 3 lists x 4 leaves per site.

struct ListDef {
  const char* label;
  const char* noun;  // leaf display noun
};

struct SiteDef {
  const char* id;
  const char* sections[5];
  ListDef lists[5][3];
};

const SiteDef kSites[] = {
    {"cms",
     {"Sales", "Catalog", "Customers", "Reports", "Marketing"},
     {{{"Orders", "Order"}, {"Invoices", "Invoice"}, {"Refunds", "Refund"}},
      {{"Products", "Product"}, {"Bundles", "Bundle"}, {"Variants", "Variant"}},
      {{"Accounts", "Account"}, {"Segments", "Segment"}, {"Subscriptions", "Subscription"}},
      {{"Metrics", "Metric"}, {"Exports", "Export"}, {"Digests", "Digest"}},
      {{"Campaigns", "Campaign"}, {"Coupons", "Coupon"}, {"Newsletters", "Newsletter"}}}},
    {"shop",
     {"Electronics", "Books", "Grocery", "Outdoors", "Clearance"},
     {{{"Laptops", "Laptop"}, {"Cameras", "Camera"}, {"Speakers", "Speaker"}},
      {{"Novels", "Novel"}, {"Atlases", "Atlas"}, {"Cookbooks", "Cookbook"}},
      {{"Produce", "Crate"}, {"Snacks", "Snack"}, {"Beverages", "Beverage"}},
      {{"Tents", "Tent"}, {"Kayaks", "Kayak"}, {"Lanterns", "Lantern"}},
      {{"Overstock", "Lot"}, {"Seconds", "Unit"}, {"Closeouts", "Pallet"}}}},
    {"forum",
     {"General", "Support", "Projects", "Events", "Archive"},
     {{{"Introductions", "Intro"}, {"Announcements", "Thread"}, {"Lounge", "Topic"}},
      {{"Troubleshooting", "Ticket"}, {"Guides", "Guide"}, {"Questions", "Question"}},
      {{"Showcases", "Showcase"}, {"Collabs", "Project"}, {"Snippets", "Snippet"}},
      {{"Meetups", "Meetup"}, {"Webinars", "Webinar"}, {"Contests", "Contest"}},
      {{"Legacy", "Relic"}, {"Attic", "Box"}, {"Vault", "Scroll"}}}},
};

int leaf_number(int section, int list, int leaf) {
  return (section + 1) * 1000 + (list + 1) * 100 + leaf;
}

// ---------------------------------------------------------------------------
// Task plan

// Families:
//   V  keyword path works end to end (base-solvable, short)
//   W  no label matches; only the blind wander finds the page (base-solvable,
//      slow; sits in section 1 so a 30-step wander reaches it)
//   E  keyword path works but a decoy field is extracted first (execution
//      failure until the reflection hint lands)
//   EX like E but behind a 3-page chain, so the exploration cap cuts it off
//      and the answer page only enters the buffer via a full-horizon episode
//   N  synonym query: no keyword match, page outside the wander radius,
//      planted on another task's page so repair can find it
//   NX like N but on a page no other task ever visits (unrepairable)
struct TaskRow {
  const char* family;
  const char* site;
  int section, list, leaf;
  const char* label;
  const char* value;
  const char* decoy_label;  // E / EX only
  const char* decoy_value;
  const char* query;
  const char* qkey;  // distinctive query substring for scripted rules (defaults to label)
  const char* chain[3];  // EX detail chain labels
};

const TaskRow kTasks[] = {
    // cms
    {"V", "cms", 0, 1, 0, "payment status", "cleared", nullptr, nullptr,
     "Find the payment status recorded on invoice 1200 in invoices under sales.", nullptr, {}},
    {"V", "cms", 0, 1, 1, "due balance", "64.20", nullptr, nullptr,
     "Find the due balance recorded on invoice 1201 in invoices under sales.", nullptr, {}},
    {"V", "cms", 2, 0, 2, "loyalty tier", "gold", nullptr, nullptr,
     "Find the loyalty tier recorded on account 3102 in accounts under customers.", nullptr, {}},
    {"W", "cms", 0, 1, 0, "vintage stamps", "47", nullptr, nullptr,
     "Count the vintage stamps catalogued across the collection.", nullptr, {}},
    {"W", "cms", 0, 1, 1, "maple saplings", "12", nullptr, nullptr,
     "How many maple saplings were potted during spring?", nullptr, {}},
    {"E", "cms", 1, 0, 0, "billing contact", "Omar Haddad", "shipping contact", "Rosa Vela",
     "Get the billing contact for product 2100 in products under catalog.", nullptr, {}},
    {"E", "cms", 1, 1, 1, "wholesale price", "17.50", "listed price", "29.99",
     "Get the wholesale price for bundle 2201 in bundles under catalog.", nullptr, {}},
    {"E", "cms", 3, 0, 0, "monthly total", "1630", "weekly total", "412",
     "Get the monthly total for metric 4100 in metrics under reports.", nullptr, {}},
    {"EX", "cms", 4, 0, 0, "net spend", "642.10", "gross spend", "900.00",
     "Get the net spend from the performance breakdown ledger for campaign 5100 in campaigns "
     "under marketing.",
     nullptr,
     {"Performance", "Breakdown", "Ledger"}},
    {"N", "cms", 1, 0, 0, "returns policy", "30 days", nullptr, nullptr,
     "Which returns policy applies for refused shipments?", nullptr, {}},
    {"N", "cms", 1, 1, 1, "gift eligibility", "yes", nullptr, nullptr,
     "Is gift wrapping eligibility enabled anywhere?", "eligibility", {}},
    {"N", "cms", 2, 0, 2, "referral bonus", "15.00", nullptr, nullptr,
     "What referral bonus does the scheme award?", nullptr, {}},
    {"N", "cms", 3, 0, 0, "alert threshold", "0.75", nullptr, nullptr,
     "Where is the alert threshold configured?", nullptr, {}},
    {"NX", "cms", 4, 2, 3, "ghost flag", "unset", nullptr, nullptr,
     "Locate the ghost flag nobody documented.", nullptr, {}},
    // shop
    {"V", "shop", 0, 1, 0, "sensor size", "aps-c", nullptr, nullptr,
     "Find the sensor size recorded on camera 1200 in cameras under electronics.", nullptr, {}},
    {"V", "shop", 0, 1, 1, "lens mount", "ef", nullptr, nullptr,
     "Find the lens mount recorded on camera 1201 in cameras under electronics.", nullptr, {}},
    {"V", "shop", 3, 1, 2, "hull length", "3.9 m", nullptr, nullptr,
     "Find the hull length recorded on kayak 4202 in kayaks under outdoors.", nullptr, {}},
    {"W", "shop", 0, 1, 0, "cedar birdhouses", "9", nullptr, nullptr,
     "How many cedar birdhouses did the workshop finish?", nullptr, {}},
    {"W", "shop", 0, 1, 1, "quartz pebbles", "311", nullptr, nullptr,
     "Tally the quartz pebbles gathered from the riverbed.", nullptr, {}},
    {"E", "shop", 1, 0, 0, "hardcover isbn", "978-1-99", "paperback isbn", "978-1-11",
     "Get the hardcover isbn for novel 2100 in novels under books.", nullptr, {}},
    {"E", "shop", 2, 1, 1, "bulk weight", "2 kg", "retail weight", "120 g",
     "Get the bulk weight for snack 3201 in snacks under grocery.", nullptr, {}},
    {"E", "shop", 4, 0, 0, "remaining count", "17", "original count", "48",
     "Get the remaining count for lot 5100 in overstock under clearance.", nullptr, {}},
    {"EX", "shop", 3, 0, 1, "floor rating", "3000 mm", "outer rating", "1500 mm",
     "Get the floor rating from the specs fabric coating view for tent 4101 in tents under "
     "outdoors.",
     nullptr,
     {"Specs", "Fabric", "Coating"}},
    {"N", "shop", 1, 0, 0, "loan window", "21 days", nullptr, nullptr,
     "When does the lending loan window close?", nullptr, {}},
    {"N", "shop", 2, 1, 1, "allergy notice", "peanuts", nullptr, nullptr,
     "Does any allergy notice mention peanuts?", nullptr, {}},
    {"N", "shop", 3, 1, 2, "rescue whistle", "included", nullptr, nullptr,
     "Was a rescue whistle shipped with the gear?", nullptr, {}},
    {"N", "shop", 4, 0, 0, "charity pledge", "5%", nullptr, nullptr,
     "What charity pledge percentage was promised?", nullptr, {}},
    {"NX", "shop", 2, 2, 2, "phantom metric", "void", nullptr, nullptr,
     "Find the phantom metric nobody tracks.", nullptr, {}},
    // forum
    {"V", "forum", 0, 1, 0, "pinned reason", "release notes", nullptr, nullptr,
     "Find the pinned reason recorded on thread 1200 in announcements under general.", nullptr,
     {}},
    {"V", "forum", 0, 1, 1, "locked status", "open", nullptr, nullptr,
     "Find the locked status recorded on thread 1201 in announcements under general.", nullptr,
     {}},
    {"W", "forum", 0, 1, 0, "amber beads", "73", nullptr, nullptr,
     "How many amber beads were strung for the mosaic?", nullptr, {}},
    {"W", "forum", 0, 1, 1, "willow branches", "28", nullptr, nullptr,
     "Count the willow branches gathered after pruning.", nullptr, {}},
    {"E", "forum", 1, 0, 0, "assignee alias", "quartzfox", "reporter alias", "nightowl",
     "Get the assignee alias for ticket 2100 in troubleshooting under support.", nullptr, {}},
    {"E", "forum", 2, 1, 1, "final deadline", "june 9", "draft deadline", "may 2",
     "Get the final deadline for project 3201 in collabs under projects.", nullptr, {}},
    {"EX", "forum", 3, 0, 0, "confirmed count", "58", "waitlist count", "31",
     "Get the confirmed count from the agenda sessions roster for meetup 4100 in meetups under "
     "events.",
     nullptr,
     {"Agenda", "Sessions", "Roster"}},
    {"N", "forum", 1, 0, 0, "escalation route", "tier two", nullptr, nullptr,
     "Which escalation route handles stuck reports?", nullptr, {}},
    {"N", "forum", 2, 1, 1, "mentor stipend", "200", nullptr, nullptr,
     "Which mentor stipend was approved this cycle?", nullptr, {}},
    {"N", "forum", 2, 1, 1, "digest cadence", "weekly", nullptr, nullptr,
     "What digest cadence was agreed for the summaries?", nullptr, {}},
    {"N", "forum", 3, 0, 0, "carpool seats", "4", nullptr, nullptr,
     "How many carpool seats remain unclaimed?", nullptr, {}},
    {"N", "forum", 1, 0, 0, "beta invites", "62", nullptr, nullptr,
     "How many beta invites are left in the pool?", nullptr, {}},
};

const std::pair<const char*, const char*> kFillerFields[] = {
    {"internal note", "n/a"},
    {"audit mark", "none"},
    {"sync cursor", "idle"},
};

struct FieldSpec {
  std::string label, value;
};

std::string site_locator(const std::string& site, const std::vector<std::string>& parts) {
  std::string loc = site;
  for (const auto& p : parts) loc += "/" + slug(p);
  return loc;
}

// ---------------------------------------------------------------------------
// Benchmark world

struct TrioPlan {
  // leaf locator -> ordered fields
  std::map<std::string, std::vector<FieldSpec>> leaf_fields;
  // leaf locator -> chain labels (EX)
  std::map<std::string, std::vector<std::string>> leaf_chains;
  // per task: answer page locator (leaf or end of chain)
  std::vector<std::string> key_locator;
};

std::string leaf_title(const SiteDef& site, int s, int l, int leaf) {
  return std::string(site.lists[s][l].noun) + " " + std::to_string(leaf_number(s, l, leaf));
}

const SiteDef& site_def(const std::string& id) {
  for (const auto& s : kSites) {
    if (id == s.id) return s;
  }
  throw std::runtime_error("unknown site in task table: " + id);
}

std::string leaf_locator_of(const TaskRow& t) {
  const SiteDef& site = site_def(t.site);
  return site_locator(t.site, {site.sections[t.section], site.lists[t.section][t.list].label,
                               leaf_title(site, t.section, t.list, t.leaf)});
}

TrioPlan plan_tasks() {
  TrioPlan plan;
  for (const TaskRow& t : kTasks) {
    std::string leaf = leaf_locator_of(t);
    std::string answer_page = leaf;
    if (t.chain[0]) {
      std::vector<std::string> chain{t.chain[0], t.chain[1], t.chain[2]};
      answer_page = leaf;
      for (const auto& c : chain) answer_page += "/" + slug(c);
      plan.leaf_chains[leaf] = chain;
    }
    auto& fields = plan.leaf_fields[answer_page];
    if (t.decoy_label) fields.push_back({t.decoy_label, t.decoy_value});
    fields.push_back({t.label, t.value});
    plan.key_locator.push_back(answer_page);
  }
  return plan;
}

ordered_json make_page(const std::string& locator, const std::string& title,
                       const std::vector<std::pair<std::string, std::string>>& links,
                       const std::vector<FieldSpec>& fields, const std::string& up,
                       const std::string& home) {
  ordered_json elements = ordered_json::array();
  ordered_json affordances = ordered_json::array();
  elements.push_back({{"id", "title"}, {"role", "heading"}, {"text", title}});
  for (const auto& [text, dest] : links) {
    const std::string id = "lnk_" + slug(text);
    elements.push_back({{"id", id}, {"role", "link"}, {"text", text}});
    affordances.push_back({{"action", "click"}, {"element", id}, {"dest", dest}});
  }
  int fidx = 0;
  for (const auto& f : fields) {
    elements.push_back({{"id", "fld_" + std::to_string(fidx++)},
                        {"role", "field"},
                        {"text", f.label + ": " + f.value}});
  }
  if (!up.empty()) {
    elements.push_back({{"id", "nav_up"}, {"role", "link"}, {"text", "Up"}});
    affordances.push_back({{"action", "click"}, {"element", "nav_up"}, {"dest", up}});
  }
  if (!home.empty()) {
    elements.push_back({{"id", "nav_home"}, {"role", "link"}, {"text", "Start"}});
    affordances.push_back({{"action", "click"}, {"element", "nav_home"}, {"dest", home}});
  }
  return {{"locator", locator}, {"elements", elements}, {"affordances", affordances}};
}

ordered_json build_trio_world() {
  TrioPlan plan = plan_tasks();
  ordered_json sites = ordered_json::array();
  std::size_t filler = 0;

  for (const SiteDef& site : kSites) {
    ordered_json pages = ordered_json::array();
    const std::string home = site_locator(site.id, {"Home"});
    std::vector<std::pair<std::string, std::string>> home_links;
    for (int s = 0; s < 5; ++s) {
      home_links.emplace_back(site.sections[s], site_locator(site.id, {site.sections[s]}));
    }
    pages.push_back(make_page(home, std::string(site.id) + " home", home_links, {}, "", ""));

    for (int s = 0; s < 5; ++s) {
      const std::string sec_loc = site_locator(site.id, {site.sections[s]});
      std::vector<std::pair<std::string, std::string>> sec_links;
      for (int l = 0; l < 3; ++l) {
        sec_links.emplace_back(site.lists[s][l].label,
                               site_locator(site.id, {site.sections[s], site.lists[s][l].label}));
      }
      pages.push_back(make_page(sec_loc, site.sections[s], sec_links, {}, "", home));

      for (int l = 0; l < 3; ++l) {
        const std::string list_loc =
            site_locator(site.id, {site.sections[s], site.lists[s][l].label});
        std::vector<std::pair<std::string, std::string>> list_links;
        for (int leaf = 0; leaf < 4; ++leaf) {
          const std::string title = leaf_title(site, s, l, leaf);
          list_links.emplace_back(
              title, site_locator(site.id, {site.sections[s], site.lists[s][l].label, title}));
        }
        pages.push_back(
            make_page(list_loc, site.lists[s][l].label, list_links, {}, sec_loc, home));

        for (int leaf = 0; leaf < 4; ++leaf) {
          const std::string title = leaf_title(site, s, l, leaf);
          const std::string leaf_loc =
              site_locator(site.id, {site.sections[s], site.lists[s][l].label, title});
          std::vector<std::pair<std::string, std::string>> leaf_links;
          auto chain_it = plan.leaf_chains.find(leaf_loc);
          if (chain_it != plan.leaf_chains.end()) {
            leaf_links.emplace_back(chain_it->second[0],
                                    leaf_loc + "/" + slug(chain_it->second[0]));
          }
          std::vector<FieldSpec> fields;
          auto field_it = plan.leaf_fields.find(leaf_loc);
          if (field_it != plan.leaf_fields.end()) {
            fields = field_it->second;
          } else {
            const auto& [flabel, fvalue] = kFillerFields[filler++ % 3];
            fields = {{flabel, fvalue}};
          }
          pages.push_back(make_page(leaf_loc, title, leaf_links, fields, list_loc, home));

          // EX detail chain pages.
          if (chain_it != plan.leaf_chains.end()) {
            std::string prev = leaf_loc;
            for (std::size_t c = 0; c < chain_it->second.size(); ++c) {
              const std::string cur = prev + "/" + slug(chain_it->second[c]);
              std::vector<std::pair<std::string, std::string>> links;
              std::vector<FieldSpec> chain_fields;
              if (c + 1 < chain_it->second.size()) {
                links.emplace_back(chain_it->second[c + 1],
                                   cur + "/" + slug(chain_it->second[c + 1]));
              } else {
                chain_fields = plan.leaf_fields.at(cur);
              }
              pages.push_back(
                  make_page(cur, chain_it->second[c], links, chain_fields, prev, home));
              prev = cur;
            }
          }
        }
      }
    }
    sites.push_back({{"site_id", site.id}, {"root", home}, {"pages", pages}});
  }

  ordered_json tasks = ordered_json::array();
  int idx = 0;
  for (const TaskRow& t : kTasks) {
    const std::string id =
        std::string("t") + (idx < 9 ? "0" : "") + std::to_string(idx + 1) + "_" + t.family;
    tasks.push_back({{"query", {{"id", id}, {"text", t.query}, {"site", t.site}}},
                     {"key_obs", {plan.key_locator[idx]}},
                     {"validator", {{"kind", "answer_equals"}, {"expected", t.value}}}});
    ++idx;
  }

  return {{"schema", 1}, {"id", "trio-bench"}, {"sites", sites}, {"tasks", tasks}};
}

ordered_json build_trio_rules() {
  TrioPlan plan = plan_tasks();
  ordered_json rules = ordered_json::array();
  int idx = 0;
  for (const TaskRow& t : kTasks) {
    const std::string qkey = t.qkey ? t.qkey : t.label;
    const std::string key_loc = plan.key_locator[idx];
    rules.push_back({{"role", "relevance"},
                     {"query_contains", {qkey}},
                     {"context_contains", {std::string(t.label) + ":"}},
                     {"verdict", {{"value", true}}}});
    if (t.decoy_label) {
      rules.push_back({{"role", "classify"},
                       {"query_contains", {qkey}},
                       {"context_contains", {"-> " + key_loc}},
                       {"verdict", {{"label", "execution"}}}});
      rules.push_back(
          {{"role", "reflect"},
           {"query_contains", {qkey}},
           {"verdict",
            {{"text", "The answer was read from the wrong field; use the named field "
                      "instead.\nhint:answer_field=" +
                          std::string(t.label)}}}});
    }
    ++idx;
  }
  return {{"schema", 1},
          {"defaults",
           {{"heuristic", {{"promise", 0.5}}},
            {"relevance", {{"value", false}}},
            {"classify", {{"label", "navigation"}}},
            {"locate", {{"first_stop", true}}},
            {"reflect", {{"text", "Review the failed trajectory and adjust the plan."}}},
            {"update", {{"policy", "prefer_validated_then_shorter"}}}}},
          {"rules", rules}};
}

// ---------------------------------------------------------------------------
// cms-mini: a single 50-page site with sort/filter flows and 20 tasks.

struct MiniLeaf {
  std::string list;     // parent list locator
  std::string title;
  std::vector<FieldSpec> fields;
};

struct MiniTask {
  std::string id, text, key, kind, expected, qkey;
};

ordered_json build_cms_mini(std::vector<MiniTask>& tasks_out) {
  ordered_json pages = ordered_json::array();
  const std::string home = "cms/home";
  auto add = [&pages](ordered_json page) { pages.push_back(std::move(page)); };

  add(make_page(home, "Store admin",
                {{"SALES", "cms/sales"},
                 {"CATALOG", "cms/catalog"},
                 {"REPORTS", "cms/reports"},
                 {"CUSTOMERS", "cms/customers"},
                 {"MARKETING", "cms/marketing"}},
                {}, "", ""));

  // Sales: the sort/filter chain plus order and invoice leaves.
  add(make_page("cms/sales", "Sales",
                {{"Orders", "cms/sales/orders"}, {"Invoices", "cms/sales/invoices"}}, {}, "",
                home));
  {
    std::vector<std::pair<std::string, std::string>> links = {
        {"Purchase Date", "cms/sales/orders/by-date"}};
    for (int i = 65; i <= 68; ++i) {
      links.emplace_back("Order " + std::to_string(i), "cms/sales/orders/" + std::to_string(i));
    }
    add(make_page("cms/sales/orders", "Orders", links, {}, "cms/sales", home));
  }
  add(make_page("cms/sales/orders/by-date", "Orders by purchase date",
                {{"Filters", "cms/sales/orders/filters"}}, {{"sorted by", "purchase date"}},
                "cms/sales/orders", home));
  add(make_page("cms/sales/orders/filters", "Order filters",
                {{"Status", "cms/sales/orders/status"}}, {}, "cms/sales/orders/by-date", home));
  {
    // The status box takes typed input; "Complete" routes to the filtered view.
    ordered_json page = make_page("cms/sales/orders/status", "Status filter", {}, {},
                                  "cms/sales/orders/filters", home);
    page["elements"].insert(page["elements"].begin() + 1,
                            ordered_json{{"id", "status_input"},
                                         {"role", "input"},
                                         {"text", "Status value"}});
    page["affordances"].push_back(
        {{"action", "type"},
         {"element", "status_input"},
         {"routes", {{"Complete", "cms/sales/orders/status-complete"}}}});
    add(page);
  }
  add(make_page("cms/sales/orders/status-complete", "Status: Complete",
                {{"Apply Filters", "cms/sales/orders/applied"}}, {},
                "cms/sales/orders/status", home));
  add(make_page("cms/sales/orders/applied", "Complete orders, oldest first",
                {{"View", "cms/sales/orders/65"}}, {{"filtered results", "1 order"}},
                "cms/sales/orders", home));
  const char* kOrderNames[] = {"Grace Nguyen", "Ivan Petrov", "Lena Okafor", "Saul Rivera"};
  for (int i = 65; i <= 68; ++i) {
    std::vector<FieldSpec> fields;
    if (i == 65) {
      fields = {{"shipping name", "Grace Nguyen"},
                {"billing name", "John Lee"},
                {"order status", "complete"}};
    } else {
      fields = {{"billing name", kOrderNames[i - 65]}, {"order status", "pending"}};
    }
    add(make_page("cms/sales/orders/" + std::to_string(i), "Order " + std::to_string(i), {},
                  fields, "cms/sales/orders", home));
  }
  {
    std::vector<std::pair<std::string, std::string>> links;
    for (int i = 71; i <= 74; ++i) {
      links.emplace_back("Invoice " + std::to_string(i),
                         "cms/sales/invoices/" + std::to_string(i));
    }
    add(make_page("cms/sales/invoices", "Invoices", links, {}, "cms/sales", home));
    const char* amounts[] = {"12.00", "48.75", "9.10", "102.40"};
    for (int i = 71; i <= 74; ++i) {
      add(make_page("cms/sales/invoices/" + std::to_string(i), "Invoice " + std::to_string(i),
                    {}, {{"amount due", amounts[i - 71]}}, "cms/sales/invoices", home));
    }
  }

  // Reports: search terms with a sort flow, bestsellers, exports.
  add(make_page("cms/reports", "Reports",
                {{"Search Terms", "cms/reports/search-terms"},
                 {"Bestsellers", "cms/reports/bestsellers"},
                 {"Exports", "cms/reports/exports"}},
                {}, "", home));
  add(make_page("cms/reports/search-terms", "Search Terms",
                {{"Hits", "cms/reports/search-terms/by-hits"}},
                {{"first entry", "gloves (3 hits)"}}, "cms/reports", home));
  add(make_page("cms/reports/search-terms/by-hits", "Search terms by hits", {},
                {{"top terms", "hollister (19 hits), Joust Bag (10 hits)"}},
                "cms/reports/search-terms", home));
  add(make_page("cms/reports/bestsellers", "Bestsellers", {},
                {{"leading product", "winter parka"}}, "cms/reports", home));
  {
    std::vector<std::pair<std::string, std::string>> links;
    for (int i = 51; i <= 54; ++i) {
      links.emplace_back("Export " + std::to_string(i),
                         "cms/reports/exports/" + std::to_string(i));
    }
    add(make_page("cms/reports/exports", "Exports", links, {}, "cms/reports", home));
    const char* rows[] = {"1400", "231", "8052", "77"};
    for (int i = 51; i <= 54; ++i) {
      add(make_page("cms/reports/exports/" + std::to_string(i), "Export " + std::to_string(i),
                    {}, {{"row count", rows[i - 51]}}, "cms/reports/exports", home));
    }
  }

  // Customers: directory + segments.
  add(make_page("cms/customers", "Customers",
                {{"Directory", "cms/customers/directory"},
                 {"Segments", "cms/customers/segments"}},
                {}, "", home));
  {
    std::vector<std::pair<std::string, std::string>> links;
    for (int i = 91; i <= 94; ++i) {
      links.emplace_back("Customer " + std::to_string(i),
                         "cms/customers/directory/" + std::to_string(i));
    }
    add(make_page("cms/customers/directory", "Directory", links, {}, "cms/customers", home));
    const char* mails[] = {"mara@corp.example", "jun@corp.example", "tess@corp.example",
                           "omar@corp.example"};
    for (int i = 91; i <= 94; ++i) {
      add(make_page("cms/customers/directory/" + std::to_string(i),
                    "Customer " + std::to_string(i), {}, {{"email address", mails[i - 91]}},
                    "cms/customers/directory", home));
    }
    links.clear();
    for (int i = 81; i <= 84; ++i) {
      links.emplace_back("Segment " + std::to_string(i),
                         "cms/customers/segments/" + std::to_string(i));
    }
    add(make_page("cms/customers/segments", "Segments", links, {}, "cms/customers", home));
    const char* members[] = {"120", "48", "300", "16"};
    for (int i = 81; i <= 84; ++i) {
      add(make_page("cms/customers/segments/" + std::to_string(i),
                    "Segment " + std::to_string(i), {}, {{"member count", members[i - 81]}},
                    "cms/customers/segments", home));
    }
  }

  // Catalog: goods + bundles.
  add(make_page("cms/catalog", "Catalog",
                {{"Goods", "cms/catalog/goods"}, {"Bundles", "cms/catalog/bundles"}}, {}, "",
                home));
  {
    std::vector<std::pair<std::string, std::string>> links;
    for (int i = 31; i <= 34; ++i) {
      links.emplace_back("Product " + std::to_string(i),
                         "cms/catalog/goods/" + std::to_string(i));
    }
    add(make_page("cms/catalog/goods", "Goods", links, {}, "cms/catalog", home));
    const char* prices[] = {"19.99", "5.25", "75.00", "3.10"};
    for (int i = 31; i <= 34; ++i) {
      add(make_page("cms/catalog/goods/" + std::to_string(i), "Product " + std::to_string(i),
                    {}, {{"unit price", prices[i - 31]}}, "cms/catalog/goods", home));
    }
    links.clear();
    for (int i = 41; i <= 44; ++i) {
      links.emplace_back("Bundle " + std::to_string(i),
                         "cms/catalog/bundles/" + std::to_string(i));
    }
    add(make_page("cms/catalog/bundles", "Bundles", links, {}, "cms/catalog", home));
    const char* sizes[] = {"3 items", "5 items", "2 items", "8 items"};
    for (int i = 41; i <= 44; ++i) {
      add(make_page("cms/catalog/bundles/" + std::to_string(i), "Bundle " + std::to_string(i),
                    {}, {{"bundle size", sizes[i - 41]}}, "cms/catalog/bundles", home));
    }
  }

  // Marketing: section + one list page.
  add(make_page("cms/marketing", "Marketing", {{"Coupons", "cms/marketing/coupons"}}, {}, "",
                home));
  add(make_page("cms/marketing/coupons", "Coupons", {}, {{"active coupons", "7"}},
                "cms/marketing", home));

  // Tasks.
  tasks_out.clear();
  tasks_out.push_back({"m01", "Get the billing name of the oldest complete order.",
                       "cms/sales/orders/65", "answer_equals", "John Lee", "billing name"});
  tasks_out.push_back({"m02", "List the top two search terms by hits from reports.",
                       "cms/reports/search-terms/by-hits", "answer_contains",
                       "hollister (19 hits)", "search terms"});
  tasks_out.push_back({"m03",
                       "Apply the complete status filter inside orders and open the filtered "
                       "view.",
                       "cms/sales/orders/applied", "state_reached", "cms/sales/orders/applied",
                       "status filter"});
  const char* inv_amounts[] = {"12.00", "48.75", "9.10", "102.40"};
  for (int i = 71; i <= 74; ++i) {
    tasks_out.push_back({"m0" + std::to_string(i - 67),
                         "Find the amount due recorded on invoice " + std::to_string(i) +
                             " in invoices under sales.",
                         "cms/sales/invoices/" + std::to_string(i), "answer_equals",
                         inv_amounts[i - 71], "invoice " + std::to_string(i)});
  }
  const char* rows[] = {"1400", "231"};
  for (int i = 51; i <= 52; ++i) {
    tasks_out.push_back({"m0" + std::to_string(i - 43),
                         "Find the row count recorded on export " + std::to_string(i) +
                             " in exports under reports.",
                         "cms/reports/exports/" + std::to_string(i), "answer_equals",
                         rows[i - 51], "export " + std::to_string(i)});
  }
  const char* mails[] = {"mara@corp.example", "jun@corp.example", "tess@corp.example"};
  for (int i = 91; i <= 93; ++i) {
    tasks_out.push_back({"m" + std::to_string(i - 81),
                         "Find the email address recorded on customer " + std::to_string(i) +
                             " in directory under customers.",
                         "cms/customers/directory/" + std::to_string(i), "answer_equals",
                         mails[i - 91], "customer " + std::to_string(i)});
  }
  const char* members[] = {"120", "48"};
  for (int i = 81; i <= 82; ++i) {
    tasks_out.push_back({"m" + std::to_string(i - 68),
                         "Find the member count recorded on segment " + std::to_string(i) +
                             " in segments under customers.",
                         "cms/customers/segments/" + std::to_string(i), "answer_equals",
                         members[i - 81], "segment " + std::to_string(i)});
  }
  const char* prices[] = {"19.99", "5.25", "75.00"};
  for (int i = 31; i <= 33; ++i) {
    tasks_out.push_back({"m" + std::to_string(i - 16),
                         "Find the unit price recorded on product " + std::to_string(i) +
                             " in goods under catalog.",
                         "cms/catalog/goods/" + std::to_string(i), "answer_equals",
                         prices[i - 31], "product " + std::to_string(i)});
  }
  const char* sizes[] = {"3 items", "5 items"};
  for (int i = 41; i <= 42; ++i) {
    tasks_out.push_back({"m" + std::to_string(i - 23),
                         "Find the bundle size recorded on bundle " + std::to_string(i) +
                             " in bundles under catalog.",
                         "cms/catalog/bundles/" + std::to_string(i), "answer_equals",
                         sizes[i - 41], "bundle " + std::to_string(i)});
  }
  tasks_out.push_back({"m20", "Find the leading product listed on bestsellers under reports.",
                       "cms/reports/bestsellers", "answer_equals", "winter parka",
                       "leading product"});

  ordered_json tasks = ordered_json::array();
  for (const auto& t : tasks_out) {
    tasks.push_back({{"query", {{"id", t.id}, {"text", t.text}, {"site", "cms"}}},
                     {"key_obs", {t.key}},
                     {"validator", {{"kind", t.kind}, {"expected", t.expected}}}});
  }
  return {{"schema", 1},
          {"id", "cms-mini"},
          {"sites", {{{"site_id", "cms"}, {"root", home}, {"pages", pages}}}},
          {"tasks", tasks}};
}

ordered_json build_cms_mini_rules(const std::vector<MiniTask>& tasks) {
  ordered_json rules = ordered_json::array();
  for (const auto& t : tasks) {
    rules.push_back({{"role", "classify"},
                     {"query_contains", {t.qkey}},
                     {"context_contains", {"-> " + t.key}},
                     {"verdict", {{"label", "execution"}}}});
  }
  // Search-terms reflection: the agent answered without sorting.
  rules.push_back({{"role", "reflect"},
                   {"query_contains", {"search terms"}},
                   {"verdict",
                    {{"text", "The entries were never sorted by hits before answering; sort the "
                              "table first.\nhint:click=Hits"}}}});
  // Billing-name reflection: the shipping name was read off the order view.
  rules.push_back({{"role", "reflect"},
                   {"query_contains", {"billing name"}},
                   {"verdict",
                    {{"text", "The shipping name was extracted instead of the billing "
                              "name.\nhint:answer_field=billing name"}}}});
  return {{"schema", 1},
          {"defaults",
           {{"heuristic", {{"promise", 0.5}}},
            {"relevance", {{"value", false}}},
            {"classify", {{"label", "navigation"}}},
            {"locate", {{"first_stop", true}}},
            {"reflect", {{"text", "Review the failed trajectory and adjust the plan."}}},
            {"update", {{"policy", "prefer_validated_then_shorter"}}}}},
          {"rules", rules}};
}

// ---------------------------------------------------------------------------
// Verification

// Brute-force reachability: action sequences over the whole affordance table.
std::map<std::string, int> bfs_distances(const SiteGraph& site) {
  std::map<std::string, int> dist{{site.root, 0}};
  std::deque<std::string> frontier{site.root};
  while (!frontier.empty()) {
    const std::string cur = frontier.front();
    frontier.pop_front();
    for (const auto& af : site.pages.at(cur).affordances) {
      auto visit = [&](const std::string& dest) {
        if (!dest.empty() && !dist.count(dest)) {
          dist[dest] = dist.at(cur) + 1;
          frontier.push_back(dest);
        }
      };
      visit(af.dest);
      for (const auto& [payload, dest] : af.payload_routes) visit(dest);
    }
  }
  return dist;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error("fixture check failed: " + what);
}

void verify_world(const World& world, std::size_t expect_pages, std::size_t expect_tasks,
                  std::size_t horizon) {
  std::size_t pages = 0;
  for (const auto& site : world.sites) pages += site.pages.size();
  check(pages == expect_pages, world.id + ": expected " + std::to_string(expect_pages) +
                                   " pages, got " + std::to_string(pages));
  check(world.tasks.size() == expect_tasks, world.id + ": task count");

  // Solvability: every key page (and StateReached target) is within the
  // horizon, and the expected answer exists on some page for answer tasks.
  for (const auto& site : world.sites) {
    const auto dist = bfs_distances(site);
    for (const auto& task : world.tasks) {
      if (task.query.site != site.site_id) continue;
      for (const auto& [loc, page] : site.pages) {
        if (!task.key_obs.members.count(world.obs_id_of(site.site_id, loc))) continue;
        check(dist.count(loc) && dist.at(loc) + 1 <= static_cast<int>(horizon),
              task.query.id + ": key page " + loc + " within horizon");
        if (task.validator.kind != ValidatorKind::StateReached) {
          bool answer_present = false;
          for (const auto& e : page.elements) {
            if (e.role == "field" && e.text.find(task.validator.expected) != std::string::npos) {
              answer_present = true;
            }
          }
          check(answer_present, task.query.id + ": expected answer on key page " + loc);
        }
      }
    }
  }

  // Distinct queries must not collide above the dedup threshold.
  Embedder embedder;
  std::vector<std::vector<double>> vecs;
  for (const auto& t : world.tasks) vecs.push_back(embedder.embed(t.query.text));
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = i + 1; j < vecs.size(); ++j) {
      check(cosine(vecs[i], vecs[j]) < 0.95,
            "query embeddings of " + world.tasks[i].query.id + " and " +
                world.tasks[j].query.id + " nearly collide");
    }
  }
}

// Simulates the scripted base policy on every benchmark task and checks the
// family design: V solves under the exploration cap, W solves only at full
// horizon, E fails at execution, EX/N/NX fail at navigation, and no episode
// ever touches an NX page.
void verify_trio_families(const World& world) {
  std::set<std::string> visited_locators;
  std::map<std::string, const TaskSpec*> by_id;
  for (const auto& t : world.tasks) by_id[t.query.id] = &t;

  int idx = 0;
  std::vector<std::string> nx_keys;
  for (const TaskRow& row : kTasks) {
    const std::string id =
        std::string("t") + (idx < 9 ? "0" : "") + std::to_string(idx + 1) + "_" + row.family;
    const TaskSpec& task = *by_id.at(id);
    ScriptedPolicy explore_policy, base_policy;
    const Trajectory explore = run_episode(world, task, explore_policy, {}, 5);
    const Trajectory base = run_episode(world, task, base_policy, {}, 30);
    const FailureLabel explore_label =
        classify_by_ground_truth(explore, task.key_obs, validate(task, explore));
    const FailureLabel base_label =
        classify_by_ground_truth(base, task.key_obs, validate(task, base));
    for (const auto& s : explore.steps) visited_locators.insert(s.obs.locator);
    for (const auto& s : base.steps) visited_locators.insert(s.obs.locator);

    const std::string family = row.family;
    if (family == "V") {
      check(explore_label == FailureLabel::Success, id + ": V solves under exploration cap");
      check(base.horizon() <= 5, id + ": V path is short");
    } else if (family == "W") {
      check(explore_label == FailureLabel::NavigationFailure, id + ": W misses under cap");
      check(base_label == FailureLabel::Success, id + ": W solves by wandering");
      check(base.horizon() >= 10, id + ": W wander is slow (" + std::to_string(base.horizon()) +
                                      " steps)");
    } else if (family == "E") {
      check(explore_label == FailureLabel::ExecutionFailure, id + ": E reaches page, fails");
      check(base_label == FailureLabel::ExecutionFailure, id + ": E fails at base too");
    } else if (family == "EX") {
      check(explore_label == FailureLabel::NavigationFailure, id + ": EX cut off by cap");
      check(base_label == FailureLabel::ExecutionFailure, id + ": EX fails at execution");
    } else {  // N / NX
      check(explore_label == FailureLabel::NavigationFailure, id + ": N nav-fails under cap");
      check(base_label == FailureLabel::NavigationFailure, id + ": N nav-fails at horizon");
      if (family == "NX") {
        TrioPlan plan = plan_tasks();
        nx_keys.push_back(plan.key_locator[idx]);
      }
    }
    ++idx;
  }
  for (const auto& loc : nx_keys) {
    check(!visited_locators.count(loc), "NX page " + loc + " is never visited by any episode");
  }
}

void verify_cms_mini(const World& world) {
  // m01's scenic route must exist: the 9-step sort/filter flow.
  const SiteGraph* site = world.find_site("cms");
  check(site != nullptr, "cms-mini has site cms");
  Episode env(world, "cms");
  const std::vector<Action> route = {
      Action::click("lnk_sales"),        Action::click("lnk_orders"),
      Action::click("lnk_purchase-date"), Action::click("lnk_filters"),
      Action::click("lnk_status"),        Action::type_into("status_input", "Complete"),
      Action::click("lnk_apply-filters"), Action::click("lnk_view"),
  };
  for (const auto& a : route) {
    env.step(a);
    check(env.current_raw_page().find("no such element") == std::string::npos,
          "scenic route step applies: " + a.describe());
  }
  check(env.current_locator() == "cms/sales/orders/65", "scenic route ends at order 65");
}

ordered_json make_config(const std::string& world, const std::string& rules,
                         const std::string& agent, int rounds, const std::string& out_dir) {
  return {{"world", world},
          {"out_dir", out_dir},
          {"agent", agent},
          {"policy", "scripted"},
          {"f_mode", "standard"},
          {"heuristic_weight", 1.0},
          {"max_expansions", 500},
          {"candidate_cap", 20},
          {"capacity", 10000},
          {"eviction", "lru"},
          {"dedup_threshold", 0.95},
          {"min_similarity", 0.30},
          {"k", 1},
          {"embed_dim", 256},
          {"horizon_cap", 30},
          {"explore_cap", 5},
          {"max_oracle_calls", 2000},
          {"oracle", {{"mode", "scripted"}, {"rules", rules}, {"endpoint", ""}}},
          {"seed", 7},
          {"rounds", rounds},
          {"parallelism", 1},
          {"trust_ground_truth", false}};
}

void write_json(const std::filesystem::path& path, const ordered_json& doc) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate and verify the bundled world fixtures"};
  std::string out_dir = "assets";
  bool check_only = false;
  app.add_option("--out", out_dir, "asset directory to write into");
  app.add_flag("--check-only", check_only, "verify without writing");
  CLI11_PARSE(app, argc, argv);

  try {
    const std::filesystem::path dir(out_dir);
    const ordered_json trio = build_trio_world();
    const ordered_json trio_rules = build_trio_rules();
    std::vector<MiniTask> mini_tasks;
    const ordered_json mini = build_cms_mini(mini_tasks);
    const ordered_json mini_rules = build_cms_mini_rules(mini_tasks);

    // Verify via a temp copy first so a broken generator never replaces good
    // fixtures.
    const auto tmp = std::filesystem::temp_directory_path() / "retrace-worldgen";
    write_json(tmp / "trio_bench.json", trio);
    write_json(tmp / "cms_mini.json", mini);
    const World trio_world = load_world((tmp / "trio_bench.json").string());
    const World mini_world = load_world((tmp / "cms_mini.json").string());
    verify_world(trio_world, 252, 40, 30);
    verify_trio_families(trio_world);
    verify_world(mini_world, 50, 20, 30);
    verify_cms_mini(mini_world);
    std::cout << "fixture checks passed: trio-bench (252 pages, 40 tasks), cms-mini (50 pages, "
                 "20 tasks)\n";
    if (check_only) return 0;

    write_json(dir / "worlds/trio_bench.json", trio);
    write_json(dir / "worlds/cms_mini.json", mini);
    write_json(dir / "oracles/trio_bench_rules.json", trio_rules);
    write_json(dir / "oracles/cms_mini_rules.json", mini_rules);
    write_json(dir / "configs/trio_full.json",
               make_config("assets/worlds/trio_bench.json",
                           "assets/oracles/trio_bench_rules.json", "full", 5, "out/trio_full"));
    write_json(dir / "configs/trio_baseline.json",
               make_config("assets/worlds/trio_bench.json",
                           "assets/oracles/trio_bench_rules.json", "baseline", 5,
                           "out/trio_baseline"));
    write_json(dir / "configs/cms_mini.json",
               make_config("assets/worlds/cms_mini.json",
                           "assets/oracles/cms_mini_rules.json", "full", 3, "out/cms_mini"));
    std::cout << "wrote fixtures under " << dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "worldgen failed: " << e.what() << "\n";
    return 1;
  }
}
