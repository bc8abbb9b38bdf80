#!/usr/bin/env python3
"""Regenerates the bundled offline fixture set under fixtures/.

Writes:
  seed_triplets.jsonl      20 instruct records (query, instruction, positive,
                           instruction negatives, hard negatives)
  noninstruct_pool.jsonl   their non-instruct counterparts
  mock_llm/responses.jsonl scripted completions keyed by query and by the
                           instruction negative the prompt targets
  parser_cases.jsonl       raw completions with their expected classification

Output is deterministic; rerun after editing TOPICS.
"""

import json
import pathlib

# Each topic: query, the facet the original instruction selects, the other
# facets (they become instruction negatives), generic hard negatives, and a
# scripted behaviour for the mock LLM ("ok", "refuse", "verbose").
TOPICS = [
    dict(
        query="how do heat pumps work",
        facets=[
            ("residential", "A heat pump in a family home moves warmth from outdoor air into the living room using a refrigerant loop and a small compressor.",
             "Only include explanations aimed at homeowners heating a house."),
            ("industrial", "Industrial heat pumps recover waste heat from factory processes and upgrade it to steam for drying and distillation lines.",
             "Restrict results to factory-scale heat recovery installations; leave out household units."),
            ("automotive", "Electric cars use a heat pump to warm the cabin in winter, which extends driving range compared with resistive heaters.",
             "Return material about cabin heating in electric vehicles and skip building systems."),
        ],
        hard=["Heat pumps were first patented in the nineteenth century after experiments with vapour compression.",
              "Refrigerants are classified by their global warming potential and flammability."],
        behaviour="ok",
    ),
    dict(
        query="causes of coastal fog",
        facets=[
            ("california", "Summer fog along the California coast forms when moist Pacific air passes over the cold upwelling current.",
             "Focus on the Pacific coast of California."),
            ("newfoundland", "Fog off Newfoundland is produced where the warm Gulf Stream meets the cold Labrador Current near the Grand Banks.",
             "Describe fog on the North Atlantic banks near Newfoundland, not the Pacific."),
            ("namib", "In the Namib desert, advection fog rolls inland from the Benguela current and is a water source for beetles.",
             "Limit the answer to desert fog in southern Africa."),
        ],
        hard=["Radiation fog forms on clear, calm nights when the ground cools quickly.",
              "Visibility below one kilometre is the meteorological threshold for fog."],
        behaviour="ok",
    ),
    dict(
        query="benefits of strength training",
        facets=[
            ("older adults", "For adults over sixty-five, resistance exercise slows muscle loss and lowers the risk of falls.",
             "Only consider evidence about people over sixty-five."),
            ("adolescents", "Supervised weight training in teenagers improves bone density without harming growth plates.",
             "Keep to studies of teenagers in supervised programs, excluding seniors."),
            ("athletes", "Elite sprinters use heavy squats to raise peak power output in the first ten metres.",
             "Select findings from elite sprint athletes and ignore general population studies."),
        ],
        hard=["Stretching before exercise has little effect on injury rates.",
              "Aerobic exercise improves cardiovascular endurance."],
        behaviour="ok",
    ),
    dict(
        query="python web frameworks comparison",
        facets=[
            ("django", "Django ships with an ORM, an admin site and authentication, which suits large content-heavy sites.",
             "Prefer write-ups that discuss batteries-included frameworks for big sites."),
            ("fastapi", "FastAPI builds on type hints and async IO to serve JSON APIs with automatic OpenAPI documentation.",
             "Show me async API frameworks driven by type hints; skip full-stack ones with admin panels."),
            ("flask", "Flask is a microframework: routing and templates only, with extensions added as needed.",
             "Return comparisons of minimal microframeworks that leave the database layer to extensions."),
        ],
        hard=["Python 3.12 improved error messages for common syntax mistakes.",
              "WSGI and ASGI define how servers talk to Python applications."],
        behaviour="ok",
    ),
    dict(
        query="treatment options for type 2 diabetes",
        facets=[
            ("medication", "Metformin remains the first-line drug for type 2 diabetes because it lowers hepatic glucose output.",
             "Only include pharmacological treatments."),
            ("diet", "A low-carbohydrate Mediterranean diet reduced HbA1c in overweight adults over twelve months.",
             "Pick dietary interventions backed by trials and exclude drug therapy."),
            ("surgery", "Bariatric surgery produced diabetes remission in over half of patients with severe obesity.",
             "Look for surgical approaches evaluated in obese patients."),
        ],
        hard=["Type 1 diabetes is an autoimmune disease that destroys insulin-producing cells.",
              "Continuous glucose monitors report readings every few minutes."],
        behaviour="ok",
    ),
    dict(
        query="history of the printing press",
        facets=[
            ("gutenberg", "Gutenberg's movable metal type in Mainz around 1450 made the mass production of books practical in Europe.",
             "Concentrate on fifteenth-century Europe."),
            ("east asia", "Bi Sheng invented ceramic movable type in Song dynasty China, and Korea later cast metal type for the Jikji.",
             "Cover earlier East Asian movable type from China and Korea instead of European presses."),
            ("industrial", "Steam-powered rotary presses of the nineteenth century printed thousands of newspaper sheets per hour.",
             "Give me the nineteenth-century mechanised newspaper era only."),
        ],
        hard=["Paper was introduced to Europe through trade with the Islamic world.",
              "Incunabula are books printed before 1501."],
        behaviour="refuse",
    ),
    dict(
        query="how to reduce cloud computing costs",
        facets=[
            ("reserved", "Committing to one- or three-year reserved instances cuts compute prices by up to seventy percent for steady workloads.",
             "Focus on long-term pricing commitments for steady workloads."),
            ("spot", "Spot instances are cheap spare capacity that can be reclaimed with two minutes notice, fine for batch jobs.",
             "Recommend interruptible capacity for fault-tolerant batch jobs and skip multi-year contracts."),
            ("rightsizing", "Rightsizing means matching instance types to measured CPU and memory use instead of guessing.",
             "Limit this to measuring utilisation and shrinking oversized machines."),
        ],
        hard=["Cloud regions are groups of data centres in one geographic area.",
              "Object storage is billed per gigabyte stored and per request."],
        behaviour="ok",
    ),
    dict(
        query="effects of caffeine on sleep",
        facets=[
            ("adults", "In healthy adults, a 400 mg caffeine dose six hours before bed shortened total sleep by about an hour.",
             "Restrict to controlled studies in healthy adults."),
            ("adolescents", "Teenagers who drink energy drinks report later bedtimes and more daytime sleepiness.",
             "Find survey research on teenagers and energy drinks, leaving out lab trials on adults."),
            ("shift workers", "Night-shift nurses use caffeine strategically, but late doses impair their daytime recovery sleep.",
             "Address night-shift workers sleeping during the day."),
        ],
        hard=["Caffeine is an adenosine receptor antagonist.",
              "Coffee contains antioxidants such as chlorogenic acid."],
        behaviour="ok",
    ),
    dict(
        query="electric vehicle battery recycling",
        facets=[
            ("hydrometallurgy", "Hydrometallurgical recycling leaches lithium, nickel and cobalt from shredded cells with acids.",
             "Only cover chemical leaching routes."),
            ("second life", "Retired car batteries with 70 percent capacity are repurposed as stationary storage for solar farms.",
             "Discuss reuse of retired packs in grid storage rather than material recovery."),
            ("policy", "The European battery regulation sets minimum recycled content targets for new batteries from 2031.",
             "Summarise European regulatory targets and exclude process chemistry."),
        ],
        hard=["Lithium iron phosphate cells avoid cobalt entirely.",
              "Battery packs are cooled with liquid glycol loops."],
        behaviour="ok",
    ),
    dict(
        query="learning to play the guitar",
        facets=[
            ("classical", "Classical guitarists read standard notation and pluck nylon strings with the fingers using rest strokes.",
             "Only include classical technique with notation."),
            ("blues", "Blues players learn the twelve-bar progression and bend strings on the minor pentatonic scale.",
             "Teach me blues improvisation by ear, with no sheet music."),
            ("kids", "Short-scale guitars and colourful chord charts help children aged six to ten keep practising.",
             "Tailor the material to young children starting out."),
        ],
        hard=["Electric guitars use magnetic pickups to convert string vibration into a signal.",
              "Guitar strings are usually replaced every few months."],
        behaviour="ok",
    ),
    dict(
        query="urban heat island mitigation",
        facets=[
            ("green roofs", "Green roofs in Toronto lowered rooftop surface temperatures by up to thirty degrees in summer.",
             "Focus on vegetated roofs."),
            ("cool pavements", "Reflective coatings on Los Angeles streets cut pavement temperature by several degrees at midday.",
             "Find road-surface coatings that reflect sunlight, not rooftop planting."),
            ("trees", "Street tree canopy in Melbourne reduced pedestrian-level heat stress during heatwaves.",
             "Restrict to tree planting along streets in Australian cities."),
        ],
        hard=["Cities are warmer at night because buildings release stored heat.",
              "Air conditioning demand peaks in late afternoon."],
        behaviour="ok",
    ),
    dict(
        query="how vaccines train the immune system",
        facets=[
            ("mrna", "mRNA vaccines deliver instructions for a spike protein, which cells produce and present to T cells.",
             "Only explain messenger RNA platforms."),
            ("live attenuated", "Live attenuated vaccines such as MMR use weakened viruses that replicate briefly and give long immunity.",
             "Describe weakened live-virus vaccines used in childhood schedules, not genetic platforms."),
            ("adjuvants", "Aluminium salt adjuvants boost the innate response so that protein subunit vaccines work.",
             "Explain how adjuvants enhance protein subunit vaccines."),
        ],
        hard=["Antibodies are Y-shaped proteins made by B cells.",
              "Herd immunity thresholds depend on how contagious a disease is."],
        behaviour="ok",
    ),
    dict(
        query="best practices for remote team meetings",
        facets=[
            ("async", "Teams across many time zones replace status meetings with written updates and recorded demos.",
             "Prefer asynchronous alternatives to live calls."),
            ("facilitation", "A facilitator keeps video calls on time, rotates speakers and uses a shared agenda document.",
             "Give tips for running live video calls with a facilitator; drop advice about written updates."),
            ("tooling", "Whiteboard apps and breakout rooms let distributed teams run workshops online.",
             "Restrict to collaborative software for online workshops."),
        ],
        hard=["Open-plan offices increase noise and interruptions.",
              "Many companies returned to the office after 2022."],
        behaviour="ok",
    ),
    dict(
        query="sourdough bread baking tips",
        facets=[
            ("starter", "Feed the sourdough starter at a one-to-one ratio of flour and water and use it at peak rise.",
             "Only cover maintaining the starter culture."),
            ("high altitude", "Above 2000 metres, sourdough proofs faster, so bakers cut fermentation time and add water.",
             "Adapt the bake for kitchens at high altitude, not starter care."),
            ("whole grain", "Whole rye doughs absorb more water and need a shorter bulk ferment than white flour.",
             "Stick to whole-grain and rye doughs."),
        ],
        hard=["Commercial yeast was industrialised in the nineteenth century.",
              "Bread ovens reach around 250 degrees Celsius."],
        behaviour="ok",
    ),
    dict(
        query="impact of social media on elections",
        facets=[
            ("misinformation", "False stories spread faster than corrections on social platforms during the 2016 US campaign.",
             "Focus on misinformation spread in the United States."),
            ("microtargeting", "Campaigns in the United Kingdom bought micro-targeted ads aimed at narrow voter segments.",
             "Look at British political ad targeting and leave aside false news."),
            ("turnout", "Facebook get-out-the-vote messages raised turnout by a fraction of a percent in a large experiment.",
             "Limit to randomised experiments on voter turnout."),
        ],
        hard=["Television debates have been broadcast since 1960.",
              "Postal voting rules differ by country."],
        behaviour="ok",
    ),
    dict(
        query="renewable energy storage technologies",
        facets=[
            ("pumped hydro", "Pumped hydro stores energy by moving water uphill and supplies most grid storage capacity worldwide.",
             "Restrict to mechanical storage using water reservoirs."),
            ("hydrogen", "Green hydrogen made by electrolysis can store surplus wind power for weeks in salt caverns.",
             "Cover chemical storage through electrolysis and caverns instead of reservoirs."),
            ("flow batteries", "Vanadium flow batteries keep electrolyte in tanks, so capacity scales with tank size.",
             "Only include electrochemical flow cells."),
        ],
        hard=["Solar panel efficiency has risen steadily since the 1970s.",
              "Wind turbines are shut down in very high winds."],
        behaviour="verbose",
    ),
    dict(
        query="how to learn a second language as an adult",
        facets=[
            ("spaced repetition", "Flashcard apps with spaced repetition help adults retain thousands of words efficiently.",
             "Focus on memorisation tools."),
            ("immersion", "Living abroad for a semester forces daily conversation and speeds up listening comprehension.",
             "Advise on living abroad and speaking daily, not on apps."),
            ("grammar", "Explicit grammar instruction helps adult learners avoid fossilised errors.",
             "Only consider classroom grammar teaching."),
        ],
        hard=["Children acquire native accents more easily than adults.",
              "There are roughly seven thousand languages spoken today."],
        behaviour="ok",
    ),
    dict(
        query="causes of the 2008 financial crisis",
        facets=[
            ("subprime", "Subprime mortgages bundled into securities spread housing risk across global banks.",
             "Focus on US mortgage lending."),
            ("regulation", "Light regulation of derivatives let credit default swaps grow without capital backing.",
             "Explain the regulatory gaps around derivatives, leaving out household lending."),
            ("europe", "European banks held large exposures to American securities and suffered a funding freeze.",
             "Only consider the impact on European banks."),
        ],
        hard=["The Great Depression began with the 1929 stock market crash.",
              "Central banks set short-term interest rates."],
        behaviour="ok",
    ),
    dict(
        query="protecting honeybee colonies",
        facets=[
            ("varroa", "Varroa mites spread deformed wing virus; beekeepers treat colonies with oxalic acid in winter.",
             "Focus on mite control."),
            ("pesticides", "Neonicotinoid seed coatings impair bee foraging, which led the EU to restrict their outdoor use.",
             "Address pesticide exposure and the European restrictions, not parasites."),
            ("habitat", "Planting wildflower margins provides forage for bees through late summer.",
             "Only include habitat and forage improvements."),
        ],
        hard=["Honey is mostly fructose and glucose.",
              "Bumblebees can buzz-pollinate tomatoes."],
        behaviour="ok",
    ),
    dict(
        query="choosing a laptop for programming",
        facets=[
            ("battery", "Laptops with ARM processors now last over fifteen hours on a charge while compiling code.",
             "Prioritise battery life for travel."),
            ("linux", "Some business laptops ship with Linux preinstalled and have well-supported Wi-Fi and graphics drivers.",
             "Recommend machines with first-class Linux support; ignore battery claims."),
            ("gpu", "A laptop with a discrete NVIDIA GPU lets you train small neural networks locally.",
             "Only consider models with a discrete graphics card for machine learning."),
        ],
        hard=["Mechanical keyboards use individual switches under each key.",
              "Screen resolution is measured in pixels."],
        behaviour="ok",
    ),
]


def doc_id(topic_index, kind, j):
    return f"t{topic_index:02d}-{kind}{j}"


def build():
    seeds, noninstruct, responses = [], [], []
    for i, topic in enumerate(TOPICS):
        facets = topic["facets"]
        positive = {"doc_id": doc_id(i, "f", 0), "text": facets[0][1]}
        instr_negs = [{"doc_id": doc_id(i, "f", j), "text": f[1]} for j, f in enumerate(facets) if j > 0]
        hard = [{"doc_id": doc_id(i, "h", j), "text": t} for j, t in enumerate(topic["hard"])]
        record_id = f"seed-{i:02d}"
        seeds.append({
            "record_id": record_id,
            "query": topic["query"],
            "instruction": facets[0][2],
            "is_instruct": True,
            "positive": positive,
            "instruction_negatives": instr_negs,
            "hard_negatives": hard,
        })
        noninstruct.append({
            "record_id": f"plain-{i:02d}",
            "query": topic["query"],
            "instruction": "",
            "is_instruct": False,
            "positive": positive,
            "instruction_negatives": [],
            "hard_negatives": hard,
        })
        for j, facet in enumerate(facets[1:], start=1):
            label, text, new_instruction = facet
            reasoning = (f"The original positive is about {facets[0][0]}; the target negative is about {label}. "
                         f"I will select {label} and exclude {facets[0][0]}.\n")
            behaviour = topic["behaviour"]
            if behaviour == "refuse":
                content = reasoning + "The remaining negatives overlap too much.\n<answer>None</answer>"
            elif behaviour == "verbose":
                content = (reasoning + "<answer>\n  <new_instruction>" + new_instruction +
                           " Cite capacity figures. Mention costs.</new_instruction>\n</answer>")
            else:
                content = reasoning + "<answer>\n  <new_instruction>" + new_instruction + "</new_instruction>\n</answer>"
            responses.append({"query": topic["query"], "target": text, "response": content})
    return seeds, noninstruct, responses


PARSER_CASES = [
    dict(raw="<answer><new_instruction>Return only peer-reviewed studies from Europe.</new_instruction></answer>",
         expect="new_instruction", text="Return only peer-reviewed studies from Europe."),
    dict(raw="The remaining negatives would also become relevant.\n<answer>None</answer>", expect="refused"),
    dict(raw="New instruction: focus on desert fog.", expect="parse_error"),
    dict(raw="<answer>\n  <new_instruction>\n    Keep only desert fog research.\n  </new_instruction>\n</answer>",
         expect="new_instruction", text="Keep only desert fog research."),
    dict(raw="Step 1: the positive covers coasts; if impossible I output <answer>None</answer>. It is possible.\n"
             "<answer><new_instruction>Prefer inland valley fog.</new_instruction></answer>",
         expect="new_instruction", text="Prefer inland valley fog."),
    dict(raw="<answer>I cannot decide.</answer>", expect="parse_error"),
    dict(raw="<answer><new_instruction></new_instruction></answer>", expect="parse_error"),
    dict(raw="", expect="parse_error"),
]


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def main():
    root = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
    seeds, noninstruct, responses = build()
    write_jsonl(root / "seed_triplets.jsonl", seeds)
    write_jsonl(root / "noninstruct_pool.jsonl", noninstruct)
    write_jsonl(root / "mock_llm" / "responses.jsonl", responses)
    write_jsonl(root / "parser_cases.jsonl", PARSER_CASES)
    print(f"wrote {len(seeds)} seeds, {len(noninstruct)} non-instruct, {len(responses)} scripted responses")


if __name__ == "__main__":
    main()
