project = "cvqkd-robust"
copyright = "2026, MDAP"
author = "MDAP"
version = "0.1.0"
release = version

extensions = [
    "sphinx_toolbox.more_autodoc",
    "sphinx_toolbox.github",
    "sphinx_toolbox.more_autodoc.sourcelink",
    "sphinx.ext.intersphinx",
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
    "sphinx_autodoc_typehints",
    "sphinxarg.ext",
    "enum_tools.autoenum",
]

templates_path = []
exclude_patterns = []

maximum_signature_line_length = 88

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
}

html_theme = "furo"
html_title = "cvqkd-robust"

html_show_copyright = False
html_show_sphinx = False

pygments_dark_style = "github-dark"

autodoc_typehints = "both"
autodoc_member_order = "bysource"
autodoc_preserve_defaults = True
autoclass_content = "both"

# the SNU alias is documented as a float
autodoc_type_aliases = {"Snu": "cvqkd.model.Snu"}

napoleon_numpy_docstring = True
napoleon_google_docstring = False

typehints_use_signature = True
typehints_fully_qualified = True
typehints_always_use_bars_union = True
typehints_defaults = "braces"

github_username = "unimelbmdap"
github_repository = "cvqkd-robust"
autodoc_show_sourcelink = True
