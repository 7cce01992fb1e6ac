from lstsr.cli.main import main

main()
