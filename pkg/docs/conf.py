#!/usr/bin/env python
#
# pmonotone documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import pmonotone

# -- General configuration ---------------------------------------------

extensions = [
    "sphinx_copybutton",
    "sphinx.ext.autodoc",
    "sphinx.ext.viewcode",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
    "myst_parser",
]

add_module_names = False
autodoc_member_order = "bysource"
autodoc_typehints = "description"
napoleon_numpy_docstring = True
napoleon_google_docstring = False

myst_title_to_header = True
myst_heading_anchors = 3

source_suffix = [".rst", ".md"]

# The master toctree document.
master_doc = "index"

# General information about the project.
project = "pmonotone"
copyright = "2024, pmonotone developers"
author = "pmonotone developers"

version = pmonotone.__version__
release = pmonotone.__version__

language = "en"

exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

pygments_style = "sphinx"

todo_include_todos = False


# -- Options for HTML output -------------------------------------------

html_theme = "sphinx_rtd_theme"
html_theme_options = {
    "navigation_depth": -1,
}

htmlhelp_basename = "pmonotonedoc"

copybutton_prompt_text = "$ "


# -- Options for LaTeX output ------------------------------------------

latex_documents = [
    (master_doc, "pmonotone.tex", "pmonotone Documentation", author, "manual"),
]

# -- Options for manual page output ------------------------------------

man_pages = [(master_doc, "pmonotone", "pmonotone Documentation", [author], 1)]
