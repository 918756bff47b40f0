from gsdtest.cli import main

main()
